import pytest

from core.errors import ConfigurationError
from core.spectral import OperatorKind
from utils.config import ExperimentKind, config_from_dict, load_config
from helpers import CONFIG_DIR


def minimal(**sections):
    raw = {
        'experiment': {'kind': 'rh_certify'},
        'domain': {'dim': 1, 'half_width': 8.0, 'points_per_axis': 64},
    }
    for name, values in sections.items():
        raw.setdefault(name, {}).update(values)
    return raw


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.toml")), ids=lambda p: p.stem)
def test_committed_configs_load(path):
    config = load_config(path)
    assert config.kind in set(ExperimentKind)
    assert config.corpus or config.kind in (ExperimentKind.RH_CERTIFY, ExperimentKind.LEMMA_CHECKS)


def test_defaults():
    config = config_from_dict(minimal())
    assert config.domain.boundary.value == "periodic"
    assert config.operator.kind is OperatorKind.LAPLACIAN
    assert config.potential is None
    heights = config.build_heights()
    assert heights.heights[0] == pytest.approx(2.0 * config.domain.spacing)
    assert heights.heights[-1] == pytest.approx(4.0)


def test_norm_lists_broadcast():
    config = config_from_dict(minimal(norm={'p': [1.0, 2.0], 'lam': 0.25}))
    assert [(n.p, n.lam) for n in config.norms] == [(1.0, 0.25), (2.0, 0.25)]


def test_suite_options_and_tolerances():
    config = config_from_dict(minimal(suite={'rh_budget': 3}, tolerances={'gaussian': 1e-7}))
    assert config.option('rh_budget') == 3
    assert config.option('missing', 'fallback') == 'fallback'
    assert config.tolerance('gaussian', 1.0) == 1e-7
    assert config.tolerance('other', 0.5) == 0.5


def test_digest_is_stable():
    assert config_from_dict(minimal()).digest() == config_from_dict(minimal()).digest()
    assert config_from_dict(minimal()).digest() != config_from_dict(minimal(experiment={'seed': 3})).digest()


def test_family_stride_follows_refinement():
    config = config_from_dict(minimal(family={'stride': 2}))
    refined = config.build_family(config.domain.refined(2))
    assert refined.stride == 4


@pytest.mark.parametrize("raw", [
    {'domain': {'dim': 1}},
    minimal(experiment={'kind': 'no_such_suite'}),
    minimal(domain={'points_per_axis': 63}),
    minimal(operator={'kind': 'schrodinger'}),
    minimal(norm={'lam': 1.5}),
    minimal(norm={'p': [1.0, 2.0], 'lam': [0.1, 0.2, 0.3]}),
    minimal(potential={'kind': 'constant', 'value': -1.0}),
    dict(minimal(), corpus='not a section'),
])
def test_invalid_configurations(raw):
    with pytest.raises(ConfigurationError):
        config_from_dict(raw)


def test_unreadable_files(tmp_path):
    with pytest.raises(ConfigurationError, match="does not exist"):
        load_config(tmp_path / "missing.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("experiment.kind = \n")
    with pytest.raises(ConfigurationError, match="not valid TOML"):
        load_config(broken)
