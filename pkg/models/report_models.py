from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator


class ReportModels():

    class SmoothingReport(BaseModel):
        """Measured constant of the heat smoothing estimate"""
        ratio: float = Field(..., description="Solution norm over data-plus-forcing norm")
        solution_norm: float = Field(..., description="Chemin-Lerner norm of the solution at index s + 2/q")
        data_norm: float = Field(..., description="Besov norm of the initial datum at index s")
        forcing_norm: float = Field(..., description="Chemin-Lerner norm of the forcing at index s + 2/q1 - 2")
        q: float
        q1: float
        s: float
        nonhomogeneous_prefactor: float = Field(..., description="1 + T^(1 + 1/q - 1/q1), unused for mean-zero data")
        mean_zero: bool

    class TransportReport(BaseModel):
        """Measured constants of the transport estimates"""
        ratio_linear: float = Field(..., description="max_t ||f(t)|| / ((1 + V(t)) (||f0|| + int ||g||))")
        ratio_exponential: float = Field(..., description="Exponential form with V built from B^{2/p}_{p,r} + L^inf")
        ratio_endpoint: float = Field(..., description="Exponential form with V built from B^{2/p}_{p,1}")
        stretching: float = Field(..., description="int_0^T ||grad v||_{L^inf} dt")

    class LifespanReport(BaseModel):
        """Explicit existence time and the quantities it is built from"""
        E0: float
        a: float
        C: float
        p: float
        j0: Optional[int] = None
        T0: float
        T1: Optional[float] = None
        T2: Optional[float] = None
        T: float
        branch: Literal["small-data", "large-data"]
        u0_low_norm: float = Field(..., description="||u0||_{B^{d/p-1}_{p,1}}, the branch test quantity")
        u0_mid_norm: float = Field(..., description="||u0||_{B^{d/p}_{p,1}}, the T1 and T2 denominator")

        @model_validator(mode="after")
        def _branch_consistency(self) -> "ReportModels.LifespanReport":
            if (self.j0 is not None) != (self.branch == "large-data"):
                raise ValueError("j0 is present exactly in the large-data branch")
            if not self.T > 0:
                raise ValueError(f"lifespan must be positive, got {self.T}")
            return self

        def csv_row(self) -> List[str]:
            def fmt(value: Optional[float]) -> str:
                return "" if value is None else f"{value:.17g}"
            return [fmt(self.E0), fmt(self.a), fmt(self.C), "" if self.j0 is None else str(self.j0),
                    fmt(self.T0), fmt(self.T1), fmt(self.T2), fmt(self.T), self.branch]

    class SemigroupSmallnessReport(BaseModel):
        l1_norm: float = Field(..., description="L^1_T(B^{d/p+2}_{p,1}) of the heat flow")
        l2_norm: float = Field(..., description="L^2_T(B^{d/p+1}_{p,1}) of the heat flow")
        total: float
        l1_blockwise: float
        l2_blockwise: float
        a: float
        T: float
        passed: bool

    class LifespanContinuityReport(BaseModel):
        reference: float
        deltas: List[float]
        lifespans: List[float]
        differences: List[float]

    class PicardConvergenceReport(BaseModel):
        differences: List[float] = Field(..., description="d_n for n = 0 .. N-2")
        ratios: List[Optional[float]] = Field(..., description="d_{n+1} / d_n, None when d_n = 0")
        h1_sup: List[float] = Field(..., description="sup_t ||u^n||_{B^{d/p+1}} + ||b^n||_{B^{d/p}}")
        b_sup: List[float]
        b_a_t: List[float] = Field(..., description="||b^n|| in L^2_T(B^{d/p+1}_{p,1}) + L^1_T(B^{d/p+2}_{p,1})")
        noise_floor: float
        converged_index: Optional[int] = Field(default=None, description="First n with d_n below the noise floor")

        def contraction_holds(self, bound: float, n_range: range) -> bool:
            for n in n_range:
                if n + 1 >= len(self.differences):
                    break
                if self.differences[n + 1] <= self.noise_floor:
                    continue
                ratio = self.ratios[n]
                if ratio is None or ratio > bound:
                    return False
            return True

    class EnergyResidualReport(BaseModel):
        residual: float
        normalized: bool
        initial_energy: float

    class DecayFit(BaseModel):
        rate: float
        r_squared: float
        window_start: float
        window_end: float
        samples: int
        truncated: bool = False

    class BootstrapReport(BaseModel):
        threshold: float
        initial_value: float
        value_max: List[float]
        value_sum: List[float]
        peak_max: float
        peak_sum: float
        crossing_time_max: Optional[float] = None
        crossing_time_sum: Optional[float] = None

        @property
        def crossed(self) -> bool:
            return self.crossing_time_sum is not None

    class GronwallBound(BaseModel):
        times: List[float]
        bound: List[float] = Field(..., description="inf past the point where the bound is undefined")
        mu_kind: Literal["linear", "log-plus", "log-frac"]
        method: Literal["closed-form", "osgood"]
        truncated: bool = False
        undefined_after: Optional[float] = None

    class VorticityBoundReport(BaseModel):
        times: List[float]
        w_linf: List[float]
        w_b0inf1: List[float]
        right_side: List[float]
        empirical_constant: float
        envelope_c: float

    class StabilitySweepReport(BaseModel):
        deltas: List[float]
        ratio_strong: List[Optional[float]]
        ratio_weak: List[Optional[float]]
        alpha: Optional[float] = Field(default=None, description="Fitted exponent of ratio_strong ~ delta^(-alpha)")
        weak_spread: Optional[float] = Field(default=None, description="max/min - 1 of ratio_weak")

    class SmallnessReport(BaseModel):
        b_mean: List[float]
        besov_smallness: float = Field(..., description="||u0||_{B^1_{inf,1}} + ||b0||_{B^0_{inf,1}}")
        l2_sum: float
        E0: float
        epsilon: float
        l2_bound: float
        theta: float
        theta_bar: float
        passes_mean: bool
        passes_epsilon: bool
        passes_l2_condition: bool

    class PowerLawReport(BaseModel):
        ns: List[int]
        norms: Dict[str, List[float]]
        exponents: Dict[str, float]

    class CheckResult(BaseModel):
        name: str
        passed: bool
        detail: str = ""
        seconds: float = 0.0
