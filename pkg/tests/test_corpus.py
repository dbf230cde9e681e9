import numpy as np
import pytest

from core.corpus import generate_corpus, morrey_singular, parse_entry
from core.errors import ConfigurationError
from core.grid import GridDomain


def test_names_follow_the_spec(line):
    corpus = generate_corpus(["constants", "modes:2", "morrey_singular"], line)
    assert [item.name for item in corpus] == [
        'constant_1', 'constant_-2.5', 'mode_1', 'mode_2',
        'morrey_singular_0', 'morrey_singular_0.25', 'morrey_singular_-0.375',
    ]


def test_same_seed_same_samples(line):
    first = generate_corpus(["trig:3", "bumps:2", "random_smooth:1"], line, seed=11)
    second = generate_corpus(["trig:3", "bumps:2", "random_smooth:1"], line, seed=11)
    other = generate_corpus(["trig:3", "bumps:2", "random_smooth:1"], line, seed=12)
    assert all(np.array_equal(a.f.values, b.f.values) for a, b in zip(first, second))
    assert not np.array_equal(first[0].f.values, other[0].f.values)


def test_entry_seeds_do_not_depend_on_neighbours(line):
    alone = generate_corpus(["constants", "bumps:2"], line, seed=5)
    shifted = generate_corpus(["constants", "bumps:2", "trig:1"], line, seed=5)
    assert np.array_equal(alone[2].f.values, shifted[2].f.values)


def test_random_smooth_is_normalised(line):
    (item,) = generate_corpus(["random_smooth"], line, seed=1)
    assert item.f.sup() == pytest.approx(1.0)


def test_modes_cycle_through_axes():
    plane = GridDomain(2, 4.0, 16)
    corpus = generate_corpus(["modes:2"], plane)
    first, second = (item.f.values for item in corpus)
    assert np.allclose(first, first[:, :1])
    assert np.allclose(second, second[:1, :])


def test_singular_function_peaks_at_its_centre(line):
    f = morrey_singular(line, 0.5, 2.0, placement=0.25)
    assert np.argmax(f.values) == line.snap([2.0])[0]
    assert np.all(np.isfinite(f.values))


@pytest.mark.parametrize("entry", ["waves", "modes:x", "modes:0"])
def test_bad_entries(entry):
    with pytest.raises(ConfigurationError):
        parse_entry(entry)


def test_empty_corpus(line):
    with pytest.raises(ConfigurationError):
        generate_corpus([], line)
