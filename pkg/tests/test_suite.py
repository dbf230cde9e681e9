import pyarrow as pa
import pytest

from core.errors import ConfigurationError, NumericalError, StageError
from utils.config import config_from_dict
from utils.suite import SuiteResult, map_rows, require_certified, stage
from assets.dirichlet_forward.dirichlet_forward import process_dirichlet_forward
from assets.equivalence.equivalence import process_equivalence
from assets.explore.explore import process_engine_build, process_limits, process_norm
from assets.kernel_bounds.kernel_bounds import process_kernel_bounds
from assets.kernel_triviality.kernel_triviality import process_kernel_triviality
from assets.lemma_checks.lemma_checks import process_lemma_checks
from assets.rh_certify.rh_certify import process_rh_certify
from assets.trace_inverse.trace_inverse import process_trace_inverse

UNIT_POTENTIAL = {'operator': {'kind': 'schrodinger'}, 'potential': {'kind': 'constant', 'value': 1.0}}


def small_config(kind='equivalence', points=64, **extra):
    raw = {
        'experiment': {'kind': kind, 'seed': 3},
        'domain': {'dim': 1, 'half_width': 8.0, 'points_per_axis': points},
        'corpus': {'generators': ['constants', 'modes:2']},
    }
    raw.update(extra)
    return config_from_dict(raw)


def test_stage_wraps_errors_with_its_name():
    with pytest.raises(StageError) as info:
        with stage("demo"):
            raise NumericalError("boom")
    assert info.value.stage == "demo"
    assert not info.value.is_configuration
    with pytest.raises(StageError) as info:
        with stage("demo"):
            raise ConfigurationError("bad")
    assert info.value.is_configuration


def test_map_rows_keeps_input_order():
    assert map_rows(lambda x: x * x, range(10), workers=4) == [x * x for x in range(10)]


def test_result_passes_only_when_every_check_does():
    table = pa.table({'x': [1]})
    assert SuiteResult("demo", table, checks={'a': True, 'b': True}).passed
    assert not SuiteResult("demo", table, checks={'a': True, 'b': False}).passed


def test_certification_gate():
    assert require_certified(small_config()) is None
    schrodinger = small_config(operator={'kind': 'schrodinger'}, potential={'kind': 'indicator'})
    with pytest.raises(ConfigurationError, match="not certified"):
        require_certified(schrodinger)


def test_engine_build_lists_the_spectrum():
    result = process_engine_build(small_config(suite={'spectrum_rows': 8}))
    assert result.table.column_names == ['index', 'eigenvalue']
    assert result.table.num_rows == 8
    assert result.table.column('eigenvalue').to_pylist()[0] == 0.0
    assert result.summary['route'] == 'fourier'


def test_norm_rows_per_function():
    result = process_norm(small_config())
    assert result.table.num_rows == 4
    assert {'name', 'p', 'lam', 'morrey', 'campanato_operator'} <= set(result.table.column_names)


def test_limits_converge_for_the_free_flow():
    result = process_limits(small_config())
    assert result.passed
    assert result.table.column('converged').to_pylist() == [True] * 4


def test_rh_certify_verdicts():
    config = config_from_dict({
        'experiment': {'kind': 'rh_certify'},
        'domain': {'dim': 1, 'half_width': 8.0, 'points_per_axis': 64, 'boundary': 'truncated_dirichlet'},
    })
    result = process_rh_certify(config)
    verdicts = dict(zip(result.table.column('potential').to_pylist(), result.table.column('verdict').to_pylist()))
    assert verdicts == {'constant': 'certified', 'power_law_2': 'certified', 'half_space_indicator': 'diverging'}
    assert result.passed


def test_equivalence_constant_is_stable_under_refinement():
    result = process_equivalence(small_config(**UNIT_POTENTIAL))
    assert result.table.num_rows == 4
    assert result.checks['sigma_vanishes']
    assert result.checks['c_star_finite']
    drift = result.summary['refinement_drift']
    assert drift['grid_doubling'] <= 0.20
    assert drift['family_refinement'] <= 0.20
    assert result.passed


def test_kernel_triviality_separates_potentials():
    damped = process_kernel_triviality(small_config('kernel_triviality', **UNIT_POTENTIAL))
    assert damped.checks == {'no_fixed_points': True, 'dominated_by_free_kernel': True}
    free = process_kernel_triviality(small_config('kernel_triviality'))
    # constants are fixed by the periodic Laplacian
    assert not free.checks['no_fixed_points']
    passed = dict(zip(free.table.column('name').to_pylist(), free.table.column('passed').to_pylist()))
    assert not passed['constant_1']


def test_dirichlet_forward_mode_checks():
    result = process_dirichlet_forward(small_config('dirichlet_forward', suite={'drift': False}))
    assert result.table.num_rows == 4
    assert result.summary['mode_window'] == [1.0, 1.25]
    for check in ('c_finite', 'extension_consistent', 'mode_oracle', 'mode_residual'):
        assert result.checks[check], check
    assert 'c_stable_grid' not in result.checks


def test_trace_inverse_flags_only_the_control():
    result = process_trace_inverse(small_config('trace_inverse', suite={'k_schedule': [1, 2]}))
    assert {'trace_errors', 'limit_error', 'undone_error', 'semigroup_defect'} <= set(result.table.column_names)
    for check in ('extensions_not_flagged', 'negative_control_flagged', 'zero_field_recovers_zero',
                  'trace_error_decreasing'):
        assert result.checks[check], check
    assert all(e <= 1e-9 for e in result.table.column('undone_error').to_pylist())


def test_kernel_bounds_structural_checks():
    result = process_kernel_bounds(small_config('kernel_bounds', points=512))
    assert result.summary['route'] == 'fourier'
    for check in ('zero_kernel_ratio', 'kernel_symmetry_defect', 'heat_composition_defect',
                  'poisson_composition_defect', 'commutation_defect', 'linfty_contraction_excess'):
        assert result.checks[check], check
    assert 'poisson_constant' in result.summary


def test_lemma_checks_rows():
    result = process_lemma_checks(small_config('lemma_checks', points=128, suite={'ks': [2, 4]}))
    names = result.table.column('check').to_pylist()
    assert names[:4] == ['linfty_slope_error', 'gap_decay_slope_error_k2', 'gap_decay_slope_error_k4',
                         'gap_decay_k_spread']
    assert result.checks['constant_is_fixed']
    assert result.checks['periodic_limit_is_mean']
    assert result.summary['expected_slope'] == pytest.approx(-0.125)
