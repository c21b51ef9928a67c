"""Random model generators: structure guarantees, ranges, determinism."""
import pytest

from gbpkit import (
    TOPOLOGY_FOREST,
    TOPOLOGY_SINGLE_LOOP,
    build_factor_graph,
    classify_topology,
    find_violations,
    generate_model,
    generate_random_loopy,
    generate_single_loop,
    generate_tree,
)
from gbpkit.generate import COEFF_DEAD_ZONE, KINDS, VARIANCE_RANGE


class TestStructure:
    def test_trees_classify_as_forest(self):
        for seed in range(15):
            model = generate_tree(2 + seed, seed=seed)
            graph = build_factor_graph(model)
            report = classify_topology(graph)
            assert report.kind == TOPOLOGY_FOREST
            assert len(model.factors) == len(model.variables) - 1

    def test_single_variable_tree(self):
        model = generate_tree(1, seed=0)
        assert len(model.variables) == 1
        assert len(model.factors) == 1
        assert set(model.factors[0].coeffs) == {"x1"}

    def test_single_loop_has_one_cycle(self):
        for seed in range(15):
            model = generate_single_loop(3 + seed, seed=seed)
            graph = build_factor_graph(model)
            report = classify_topology(graph)
            assert report.kind == TOPOLOGY_SINGLE_LOOP
            assert report.total_cycles == 1

    def test_loopy_scopes_are_two_or_three(self):
        for seed in range(15):
            model = generate_random_loopy(6, seed=seed)
            assert len(model.factors) == 6
            for factor in model.factors:
                assert len(factor.coeffs) in (2, 3)

    def test_generated_models_validate(self):
        for seed in range(10):
            for kind in KINDS:
                assert find_violations(generate_model(kind, 5, seed=seed)) == []


class TestParameterRanges:
    def test_variances_in_range(self):
        lo, hi = VARIANCE_RANGE
        for seed in range(10):
            model = generate_random_loopy(8, seed=seed)
            for variable in model.variables:
                assert lo <= variable.prior_var <= hi
            for factor in model.factors:
                assert lo <= factor.noise_var <= hi

    def test_coefficients_respect_dead_zone_and_range(self):
        for seed in range(10):
            model = generate_random_loopy(8, seed=seed, coeff_range=(-3.0, 3.0))
            for factor in model.factors:
                for coeff in factor.coeffs.values():
                    assert abs(coeff) >= COEFF_DEAD_ZONE
                    assert -3.0 <= coeff <= 3.0

    def test_one_sided_range(self):
        model = generate_tree(6, seed=1, coeff_range=(0.5, 1.5))
        for factor in model.factors:
            for coeff in factor.coeffs.values():
                assert 0.5 <= coeff <= 1.5


class TestDeterminism:
    def test_same_seed_same_model(self):
        for kind in KINDS:
            assert generate_model(kind, 7, seed=99) == generate_model(kind, 7, seed=99)

    def test_different_seeds_differ(self):
        assert generate_tree(7, seed=0) != generate_tree(7, seed=1)


class TestValidationErrors:
    def test_size_too_small(self):
        with pytest.raises(ValueError):
            generate_tree(0, seed=0)
        with pytest.raises(ValueError):
            generate_single_loop(1, seed=0)
        with pytest.raises(ValueError):
            generate_random_loopy(1, seed=0)

    def test_bad_coeff_range(self):
        with pytest.raises(ValueError, match="low < high"):
            generate_tree(3, seed=0, coeff_range=(2.0, -2.0))
        with pytest.raises(ValueError, match="dead zone"):
            generate_tree(3, seed=0, coeff_range=(-0.05, 0.05))

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown kind"):
            generate_model("grid", 4, seed=0)
