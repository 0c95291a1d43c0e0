"""因子分布计算的测试"""

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import integrate

from sievelab.config.settings import THEOREM1_FAMILY, THEOREM3A_FAMILY, THEOREM3B2_FAMILY
from sievelab.core import factor_models
from sievelab.core.errors import InfiniteMean, NoRoot
from sievelab.models.factor_family import FactorFamily, TailSpec


def family(data):
    return FactorFamily.model_validate(data)


class TestTailSpec:
    """分支分布参数校验"""

    def test_pareto_requires_alpha(self):
        with pytest.raises(ValidationError, match="需要提供 alpha"):
            TailSpec(kind="pareto")

    def test_point_mass_below_one_requires_bounded(self):
        with pytest.raises(ValidationError, match="bounded"):
            TailSpec(kind="point_mass", value=0.5)
        assert TailSpec(kind="point_mass", value=0.5, bounded=True).tail_index == math.inf

    def test_tail_index(self):
        assert TailSpec(kind="pareto", alpha=0.7).tail_index == 0.7
        assert TailSpec(kind="pareto2_logvariance").tail_index == 2.0
        assert TailSpec(kind="slow_loglogtail").tail_index == 0.0

    def test_weights_must_sum_below_one(self):
        with pytest.raises(ValidationError, match="p \\+ q"):
            FactorFamily(p=0.7, q=0.5)

    def test_filler_weight(self):
        assert family(THEOREM1_FAMILY).filler_weight == pytest.approx(0.4)


class TestTailFunctions:
    """尾概率与尾分位数"""

    def test_pareto_survival(self):
        spec = TailSpec(kind="pareto", alpha=0.5)
        assert factor_models.tail_survival(spec, 4.0) == pytest.approx(0.5)
        assert factor_models.tail_survival(spec, 0.3) == 1.0

    @pytest.mark.parametrize("spec", [
        TailSpec(kind="pareto", alpha=0.5),
        TailSpec(kind="pareto", alpha=1.5),
        TailSpec(kind="pareto2_logvariance"),
        TailSpec(kind="slow_logtail"),
        TailSpec(kind="slow_loglogtail"),
        TailSpec(kind="pareto_logcorrected", alpha=0.6),
    ])
    def test_quantile_inverts_survival(self, spec):
        """P{V > Q(u)} = u"""
        u = np.array([0.9, 0.5, 0.2])
        x = factor_models.tail_quantile(spec, u)
        np.testing.assert_allclose(factor_models.tail_survival(spec, x), u, rtol=1e-9)

    def test_cross_threshold_is_involution(self):
        x = np.array([0.01, 0.5, 1.0, 3.0])
        np.testing.assert_allclose(factor_models.cross_threshold(factor_models.cross_threshold(x)), x, rtol=1e-9)

    def test_tail_ratio_for_equal_pareto_tails(self):
        """左右分支同为 pareto(0.5) 时，t >= 1 上尾比恰为 p/q"""
        fam = family(THEOREM1_FAMILY)
        assert factor_models.theorem2_ratio(fam, 5.0) == pytest.approx(1.0)

    def test_empirical_tails_match(self):
        fam = family(THEOREM1_FAMILY)
        rng = np.random.default_rng(2024)
        xi, eta = factor_models.sample_log_factors(fam, rng, 200000)
        assert abs(np.mean(xi > 4.0) - factor_models.tail_F(fam, 4.0)) < 5e-3
        assert abs(np.mean(eta > 4.0) - factor_models.tail_G(fam, 4.0)) < 5e-3
        assert abs(np.mean(xi > 0.2) - factor_models.tail_F(fam, 0.2)) < 5e-3

    def test_single_factor(self):
        w = factor_models.sample_factor(family(THEOREM1_FAMILY), np.random.default_rng(3))
        assert isinstance(w, float)
        assert 0.0 < w < 1.0

    def test_factors_inside_unit_interval(self):
        w = factor_models.sample_factors(family(THEOREM1_FAMILY), np.random.default_rng(1), 50000)
        assert np.all((w > 0.0) & (w < 1.0))


class TestMoments:
    """矩与尾部概况"""

    def test_infinite_mean(self):
        assert math.isinf(factor_models.mean_log_factor(family(THEOREM1_FAMILY)))
        assert math.isinf(factor_models.variance_log_factor(family(THEOREM1_FAMILY)))

    def test_logvariance_family(self):
        fam = family(THEOREM3B2_FAMILY)
        assert math.isfinite(factor_models.mean_log_factor(fam))
        assert math.isinf(factor_models.variance_log_factor(fam))

    def test_mean_and_variance_match_monte_carlo(self):
        fam = family(THEOREM3A_FAMILY)
        xi, _ = factor_models.sample_log_factors(fam, np.random.default_rng(7), 200000)
        mu = factor_models.mean_log_factor(fam)
        se = xi.std(ddof=1) / math.sqrt(len(xi))
        assert abs(xi.mean() - mu) < 5 * se
        assert factor_models.variance_log_factor(fam) == pytest.approx(xi.var(ddof=1), rel=0.03)

    def test_truncated_second_moment(self):
        fam = family(THEOREM3A_FAMILY)
        xi, _ = factor_models.sample_log_factors(fam, np.random.default_rng(8), 200000)
        values = np.where(xi <= 5.0, xi ** 2, 0.0)
        se = values.std(ddof=1) / math.sqrt(len(values))
        assert abs(factor_models.trunc_second_moment(fam, 5.0) - values.mean()) < 5 * se

    def test_truncation_point_bound(self):
        with pytest.raises(ValueError, match="截断点"):
            factor_models.trunc_second_moment(family(THEOREM3A_FAMILY), 0.5)

    def test_tail_profile(self):
        profile = factor_models.tail_profile(family(THEOREM1_FAMILY))
        assert profile.alpha == 0.5
        assert profile.beta == 0.5
        assert profile.c_ratio == pytest.approx(1.0)
        assert not profile.mean_finite

        profile = factor_models.tail_profile(family(THEOREM3A_FAMILY))
        assert profile.c_ratio is None
        assert profile.mean_finite and profile.variance_finite


class TestNorming:
    """归一化函数"""

    def test_pareto_closed_form(self):
        fam = FactorFamily(p=0.3, q=0.3, left_tail=TailSpec(kind="pareto", alpha=1.5),
                           right_tail=TailSpec(kind="pareto", alpha=0.6))
        c = factor_models.norming_c(fam, 1e4)
        assert c == pytest.approx(3000.0 ** (1 / 1.5), rel=1e-12)
        assert abs(factor_models.norming_residual(fam, 1e4, c)) < 1e-12

    @pytest.mark.parametrize("t", [1e2, 1e4, 1e8])
    def test_logvariance_residual(self, t):
        fam = family(THEOREM3B2_FAMILY)
        c = factor_models.norming_c(fam, t)
        assert abs(factor_models.norming_residual(fam, t, c)) < 1e-9

    def test_no_root_without_tail_index(self):
        with pytest.raises(NoRoot):
            factor_models.norming_c(family(THEOREM3A_FAMILY), 1e3)

    def test_integrated_tail_matches_quadrature(self):
        fam = family(THEOREM1_FAMILY)
        points = [math.log(2.0), float(factor_models.cross_threshold(1.0)), 1.0]
        expected, _ = integrate.quad(lambda y: factor_models.tail_G(fam, y), 0.0, 10.0,
                                     points=points, limit=400)
        assert factor_models.integrated_tail_G(fam, 10.0) == pytest.approx(expected, rel=1e-6)

    def test_norming_q(self):
        fam = family(THEOREM3A_FAMILY)
        expected = math.sqrt(factor_models.integrated_tail_G(fam, 12.0) / factor_models.mean_log_factor(fam))
        assert factor_models.norming_q(fam, 12.0) == pytest.approx(expected)

    def test_norming_q_requires_finite_mean(self):
        with pytest.raises(InfiniteMean):
            factor_models.norming_q(family(THEOREM1_FAMILY), 12.0)

    def test_unknown_g_case(self):
        with pytest.raises(ValueError, match="未知"):
            factor_models.norming_g(family(THEOREM3A_FAMILY), 12.0, "zz")


class TestHypotheses:
    """定理条件校验"""

    def test_defaults_pass(self):
        factor_models.validate_hypotheses(family(THEOREM1_FAMILY), "theorem1")
        factor_models.validate_hypotheses(family(THEOREM3A_FAMILY), "theorem3a")
        factor_models.validate_hypotheses(family(THEOREM3B2_FAMILY), "theorem3b2")

    def test_theorem1_alpha_range(self):
        data = dict(THEOREM1_FAMILY, left_tail={"kind": "pareto", "alpha": 1.5},
                    right_tail={"kind": "pareto", "alpha": 1.5})
        with pytest.raises(ValueError, match="alpha 必须位于 \\(0,1\\)"):
            factor_models.validate_hypotheses(family(data), "theorem1")

    def test_theorem3a_requires_finite_variance(self):
        with pytest.raises(ValueError, match="Var"):
            factor_models.validate_hypotheses(family(THEOREM1_FAMILY), "theorem3a")

    def test_theorem3c2_beta_bound(self):
        data = {"p": 0.3, "q": 0.3, "left_tail": {"kind": "pareto", "alpha": 1.5},
                "right_tail": {"kind": "pareto", "alpha": 0.6}}
        with pytest.raises(ValueError):
            factor_models.validate_hypotheses(family(data), "theorem3c2")

    def test_theorem3c2_bound_is_inclusive(self):
        """beta = 2/alpha - 1 属于 c2 而不属于 c1"""
        data = {"p": 0.3, "q": 0.3, "left_tail": {"kind": "pareto", "alpha": 1.5},
                "right_tail": {"kind": "pareto", "alpha": 1.0 / 3.0}}
        factor_models.validate_hypotheses(family(data), "theorem3c2")
        with pytest.raises(ValueError, match="beta > 2/alpha - 1"):
            factor_models.validate_hypotheses(family(data), "theorem3c1")
