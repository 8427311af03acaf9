"""Certified continuous-variable entanglement swapping on covariance matrices.

Two sites each hold a tripartite Gaussian state over a remote mode (a), a
Bell mode (b) and a certifying mode (c). The two Bell modes interfere on a
balanced beam splitter; x is measured on the minus output and p on the plus
output. Conditioned on the outcomes, entanglement appears between the two
remote modes and, independently measurable, between the two certifying
modes. The certifying entanglement lower-bounds the remote entanglement
when the input states satisfy chi < 1.

All closed forms here were checked against the generic beam-splitter +
homodyne conditioning path of the gaussian module; the internal mode order
after the swap is (a1, a2, c1, c2) everywhere.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import gaussian
from .gaussian import Bipartition, GaussianState

Z = np.diag([1.0, -1.0])

# |det M| below this means the summed Bell block cannot be inverted
SINGULAR_M_TOL = 1e-12

# zero-pattern tolerance for the standard-form predicate
STANDARD_FORM_TOL = 1e-9

# strict-inequality slack for the purity classifier (relative)
CLASSIFY_REL_TOL = 1e-9


class SingularBellBlockError(ValueError):
    """B1 + Z B2 Z is numerically singular; the protocol degenerates."""


class NotStandardFormError(ValueError):
    """Input CM does not match the standard-form zero pattern."""


@dataclass(frozen=True)
class TripartiteCM:
    """6x6 CM over (remote a, Bell b, certifying c), stored as 2x2 blocks.

    Layout: rows/cols (a, b, c) with upper blocks R=Cov(a,a), D=Cov(a,b),
    F=Cov(a,c), B=Cov(b,b), E=Cov(b,c), C=Cov(c,c).
    """

    R: np.ndarray
    D: np.ndarray
    F: np.ndarray
    B: np.ndarray
    E: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        blocks = {}
        for name in ("R", "D", "F", "B", "E", "C"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (2, 2):
                raise ValueError(f"block {name} must be 2x2, got {m.shape}")
            m = m.copy()
            m.setflags(write=False)
            blocks[name] = m
            object.__setattr__(self, name, m)
        # assembling validates symmetry and physicality of the 6x6
        GaussianState(self.matrix(), np.zeros(6))

    def matrix(self) -> np.ndarray:
        # lower blocks are the transposes by construction, so any asymmetry
        # in R, B, C surfaces in the GaussianState symmetry check
        return np.block([
            [self.R, self.D, self.F],
            [self.D.T, self.B, self.E],
            [self.F.T, self.E.T, self.C],
        ])

    @classmethod
    def from_matrix(cls, cm: np.ndarray) -> "TripartiteCM":
        cm = np.asarray(cm, dtype=float)
        if cm.shape != (6, 6):
            raise ValueError(f"tripartite CM must be 6x6, got {cm.shape}")
        return cls(R=cm[0:2, 0:2], D=cm[0:2, 2:4], F=cm[0:2, 4:6],
                   B=cm[2:4, 2:4], E=cm[2:4, 4:6], C=cm[4:6, 4:6])


@dataclass(frozen=True)
class GainMatrices:
    """Per-mode 2x2 gains for the outcome-conditioned displacements.

    The textbook protocol uses diagonal gains (one scalar per quadrature);
    optimal gains for inputs away from the standard form are full 2x2, so
    the diagonal property is exposed as a predicate rather than enforced.
    """

    G_a1: np.ndarray
    G_a2: np.ndarray
    G_c1: np.ndarray
    G_c2: np.ndarray

    def __post_init__(self):
        for name in ("G_a1", "G_a2", "G_c1", "G_c2"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (2, 2):
                raise ValueError(f"gain {name} must be 2x2, got {m.shape}")
            m = m.copy()
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @classmethod
    def from_diagonals(cls, g_a1, g_a2, g_c1, g_c2) -> "GainMatrices":
        """Build diagonal gains from (x, p) scalar pairs."""
        return cls(*(np.diag(np.asarray(g, dtype=float))
                     for g in (g_a1, g_a2, g_c1, g_c2)))

    @classmethod
    def zero(cls) -> "GainMatrices":
        z = np.zeros((2, 2))
        return cls(z, z, z, z)

    def is_diagonal(self, tol: float = 1e-12) -> bool:
        return all(
            abs(g[0, 1]) <= tol and abs(g[1, 0]) <= tol
            for g in (self.G_a1, self.G_a2, self.G_c1, self.G_c2))

    def stacked(self) -> np.ndarray:
        return np.vstack([self.G_a1, self.G_a2, self.G_c1, self.G_c2])


@dataclass(frozen=True)
class BellOutcome:
    """Homodyne results (x on the minus output, p on the plus output)."""

    beta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=float).reshape(2)
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)


class ProtocolClass(enum.Enum):
    Certifiable = 1
    NotCertifiable = 2
    WrongSwapping = 3
    NoSwapping = 4


@dataclass(frozen=True)
class SwapOutput:
    """Post-measurement 4-mode state over (a1, a2, c1, c2)."""

    V_R: np.ndarray
    V_C: np.ndarray
    V_X: np.ndarray
    cm: np.ndarray
    eta_remote: float
    eta_certifying: float
    E_N_remote: float
    E_N_certifying: float


def _bell_inverse(V1: TripartiteCM, V2: TripartiteCM) -> tuple:
    m = V1.B + Z @ V2.B @ Z
    if abs(np.linalg.det(m)) <= SINGULAR_M_TOL:
        raise SingularBellBlockError(
            f"det(B1 + Z B2 Z) = {np.linalg.det(m):.3e}")
    return m, np.linalg.inv(m)


def optimal_gains(V1: TripartiteCM, V2: TripartiteCM) -> GainMatrices:
    """Gains that cancel the conditional means for every Bell outcome.

    These reduce to the familiar diagonal expressions (-D/(2b) style) when
    both inputs are in standard form; in general they are full 2x2.
    """
    _, w = _bell_inverse(V1, V2)
    return GainMatrices(
        G_a1=-V1.D @ w,
        G_a2=V2.D @ Z @ w,
        G_c1=-V1.E.T @ w,
        G_c2=V2.E.T @ Z @ w,
    )


def _conditional_mean_map(V1: TripartiteCM, V2: TripartiteCM) -> np.ndarray:
    """Linear map from the outcome pair to the 8-vector conditional mean."""
    _, w = _bell_inverse(V1, V2)
    s2 = np.sqrt(2.0)
    wz = w @ Z
    zwz = Z @ wz
    out = np.zeros((8, 2))
    out[0:2] = -s2 * V1.D @ wz
    out[2:4] = s2 * V2.D @ zwz
    out[4:6] = -s2 * V1.E.T @ wz
    out[6:8] = s2 * V2.E.T @ zwz
    return out


def displaced_first_moment(V1: TripartiteCM, V2: TripartiteCM,
                           gains: GainMatrices,
                           outcome: BellOutcome) -> np.ndarray:
    """Mean of the gain-displaced conditional state for one Bell outcome.

    Ordering is the internal (a1, a2, c1, c2); some references print the
    same vector in the order (a1, c1, c2, a2), i.e. rows permuted by
    [0, 3, 1, 2] at the mode level. Each mode's displacement is
    -sqrt(2) G Z beta, so the result is identically zero at optimal gains.
    """
    u = outcome.beta
    mean = _conditional_mean_map(V1, V2) @ u
    s2 = np.sqrt(2.0)
    for k, g in enumerate((gains.G_a1, gains.G_a2, gains.G_c1, gains.G_c2)):
        mean[2 * k:2 * k + 2] += -s2 * g @ Z @ u
    return mean


def conditional_output_cm(V1: TripartiteCM, V2: TripartiteCM) -> SwapOutput:
    """Post-measurement CM over (a1, a2, c1, c2), outcome independent."""
    _, w = _bell_inverse(V1, V2)
    zwz = Z @ w @ Z
    wz = w @ Z
    zw = Z @ w
    d1, d2, e1t, e2t = V1.D, V2.D, V1.E.T, V2.E.T
    v_r = np.block([
        [V1.R - d1 @ w @ d1.T, d1 @ wz @ d2.T],
        [d2 @ zw @ d1.T, V2.R - d2 @ zwz @ d2.T],
    ])
    v_c = np.block([
        [V1.C - e1t @ w @ e1t.T, e1t @ wz @ e2t.T],
        [e2t @ zw @ e1t.T, V2.C - e2t @ zwz @ e2t.T],
    ])
    v_x = np.block([
        [V1.F - d1 @ w @ e1t.T, d1 @ wz @ e2t.T],
        [d2 @ zw @ e1t.T, V2.F - d2 @ zwz @ e2t.T],
    ])
    cm = np.block([[v_r, v_x], [v_x.T, v_c]])
    cm = 0.5 * (cm + cm.T)
    # construction doubles as the physicality check on the output
    GaussianState(cm, np.zeros(8))
    split = Bipartition((0,), (1,))
    eta_r = gaussian.min_pts_eigenvalue(v_r, split)
    eta_c = gaussian.min_pts_eigenvalue(v_c, split)
    return SwapOutput(
        V_R=v_r, V_C=v_c, V_X=v_x, cm=cm,
        eta_remote=eta_r, eta_certifying=eta_c,
        E_N_remote=max(0.0, -np.log(2.0 * eta_r)),
        E_N_certifying=max(0.0, -np.log(2.0 * eta_c)),
    )


def ensemble_output_blocks(V1: TripartiteCM, V2: TripartiteCM,
                           gains: GainMatrices) -> tuple:
    """Ensemble-averaged remote and certifying 4x4 blocks for any gains.

    Averaging the gain-displaced conditional states over the Bell outcome
    distribution adds the covariance of the residual displacement; the
    result collapses onto the conditional blocks exactly at optimal gains.
    """
    m, _ = _bell_inverse(V1, V2)
    g1, g2 = gains.G_a1, gains.G_a2
    h1, h2 = gains.G_c1, gains.G_c2
    d1, d2, e1t, e2t = V1.D, V2.D, V1.E.T, V2.E.T

    r11 = V1.R + g1 @ m @ g1.T + g1 @ d1.T + d1 @ g1.T
    r12 = g1 @ m @ g2.T - g1 @ Z @ d2.T + d1 @ g2.T
    r22 = V2.R + g2 @ m @ g2.T - g2 @ Z @ d2.T - d2 @ Z @ g2.T
    vp_r = np.block([[r11, r12], [r12.T, r22]])

    c11 = V1.C + h1 @ m @ h1.T + h1 @ e1t.T + e1t @ h1.T
    c12 = h1 @ m @ h2.T - h1 @ Z @ e2t.T + e1t @ h2.T
    c22 = V2.C + h2 @ m @ h2.T - h2 @ Z @ e2t.T - e2t @ Z @ h2.T
    vp_c = np.block([[c11, c12], [c12.T, c22]])
    return 0.5 * (vp_r + vp_r.T), 0.5 * (vp_c + vp_c.T)


def bell_outcome_covariance(V1: TripartiteCM, V2: TripartiteCM) -> np.ndarray:
    """2x2 covariance of the measured pair (x_minus, p_plus): Z M Z / 2."""
    m, _ = _bell_inverse(V1, V2)
    return Z @ m @ Z / 2.0


def bell_outcome_sampler(V1: TripartiteCM, V2: TripartiteCM, seed,
                         chunk: int = 8192):
    """Endless deterministic stream of Bell outcomes for the given inputs."""
    cov = bell_outcome_covariance(V1, V2)
    chol = np.linalg.cholesky(cov)
    rng = np.random.default_rng(seed)
    while True:
        draws = rng.standard_normal((chunk, 2)) @ chol.T
        for row in draws:
            yield BellOutcome(row)


@dataclass(frozen=True)
class MonteCarloEstimate:
    cm: np.ndarray
    n_samples: int
    stderr_scale: float


def monte_carlo_ensemble(V1: TripartiteCM, V2: TripartiteCM,
                         gains: GainMatrices, n: int, seed) -> MonteCarloEstimate:
    """Empirical ensemble CM over n sampled gain-displaced conditional states.

    The conditional CM is outcome independent, so the ensemble CM is the
    conditional CM plus the empirical covariance of the displaced means.
    stderr_scale = 5/sqrt(n) is the tolerance used by the convergence tests
    (Frobenius distance scaled by the norm of the target CM).
    """
    if n < 2:
        raise ValueError("need at least 2 samples")
    cov = bell_outcome_covariance(V1, V2)
    chol = np.linalg.cholesky(cov)
    rng = np.random.default_rng(seed)
    lmap = _conditional_mean_map(V1, V2)
    s2 = np.sqrt(2.0)
    gz = np.zeros((8, 2))
    for k, g in enumerate((gains.G_a1, gains.G_a2, gains.G_c1, gains.G_c2)):
        gz[2 * k:2 * k + 2] = -s2 * g @ Z
    total = lmap + gz                       # outcome -> displaced mean
    draws = rng.standard_normal((n, 2)) @ chol.T
    means = draws @ total.T                 # (n, 8)
    centered = means - means.mean(axis=0)
    emp = centered.T @ centered / n
    base = conditional_output_cm(V1, V2).cm
    return MonteCarloEstimate(cm=base + emp, n_samples=n,
                              stderr_scale=5.0 / np.sqrt(n))


def is_standard_form(V: TripartiteCM, tol: float = STANDARD_FORM_TOL) -> bool:
    """Zero-pattern predicate: diagonal blocks proportional to identity,
    D diagonal, E upper triangular. (The a-c block F is unconstrained.)
    """
    scale = max(1.0, float(np.max(np.abs(V.matrix()))))
    devs = []
    for blk in (V.R, V.B, V.C):
        devs.append(abs(blk[0, 0] - blk[1, 1]))
        devs.append(abs(blk[0, 1]))
        devs.append(abs(blk[1, 0]))
    devs.append(abs(V.D[0, 1]))
    devs.append(abs(V.D[1, 0]))
    devs.append(abs(V.E[1, 0]))
    return max(devs) <= tol * scale


def symmetric_closed_forms(V: TripartiteCM) -> tuple:
    """(eta_R_minus, eta_C_minus, eta_C_plus) for two identical standard-form
    inputs.

    eta_R_minus = sqrt(det V_RB)/b; the certifying pair comes from the
    radical in det V_BC, b, c and the two Bell-certifying covariances e' (p-p)
    and e'' (x_b-p_c). Requires the standard-form zero pattern.
    """
    if not is_standard_form(V):
        raise NotStandardFormError("input fails the standard-form predicate")
    full = V.matrix()
    b = full[2, 2]
    c = full[4, 4]
    ep = V.E[1, 1]
    epp = V.E[0, 1]
    det_rb = float(np.linalg.det(full[0:4, 0:4]))
    det_bc = float(np.linalg.det(full[2:6, 2:6]))
    eta_r = np.sqrt(max(det_rb, 0.0)) / b
    rad = (b * b * c * c - det_bc) ** 2 - (2.0 * b * c * ep * epp) ** 2
    rad = np.sqrt(max(rad, 0.0))
    eta_c_minus = np.sqrt(max(det_bc + b * b * c * c - rad, 0.0) / 2.0) / b
    eta_c_plus = np.sqrt((det_bc + b * b * c * c + rad) / 2.0) / b
    return float(eta_r), float(eta_c_minus), float(eta_c_plus)


def chi(V: TripartiteCM) -> float:
    """Local symplectic invariant sqrt(det V_RB / det V_BC).

    chi < 1 makes the certifying entanglement a lower bound on the remote
    entanglement for standard-form inputs.
    """
    full = V.matrix()
    det_rb = float(np.linalg.det(full[0:4, 0:4]))
    det_bc = float(np.linalg.det(full[2:6, 2:6]))
    if det_bc <= 0.0 or det_rb <= 0.0:
        raise ValueError(
            f"non-positive subsystem determinant: det_RB={det_rb:.3e}, "
            f"det_BC={det_bc:.3e}")
    return float(np.sqrt(det_rb / det_bc))


def purities_triplet(V: TripartiteCM) -> tuple:
    """(mu_B, mu_RB, mu_BC) of the Bell mode and the two pair subsystems."""
    state = GaussianState(V.matrix(), np.zeros(6))
    mu_b = gaussian.purity(state, [1])
    mu_rb = gaussian.purity(state, [0, 1])
    mu_bc = gaussian.purity(state, [1, 2])
    return mu_b, mu_rb, mu_bc


def _strictly_greater(a: float, b: float) -> bool:
    return (a - b) > CLASSIFY_REL_TOL * max(abs(a), abs(b))


def classify(V: TripartiteCM) -> ProtocolClass:
    """Four-way classification from the local purities.

    Certifiable     mu_RB > mu_BC > mu_B   swap works, certificate is a
                                           valid lower bound
    NotCertifiable  mu_RB > mu_B >= mu_BC  swap works, certifying pair stays
                                           separable
    WrongSwapping   mu_BC > mu_B, ordering mu_RB > mu_BC fails: the
                                           certificate overstates the swap
    NoSwapping      neither pair beats the Bell-mode purity

    Ties (relative 1e-9) resolve away from Certifiable.
    """
    return classify_from_purities(*purities_triplet(V))


def classify_from_purities(mu_b: float, mu_rb: float,
                           mu_bc: float) -> ProtocolClass:
    """Same decision rule as classify, on already-computed purities."""
    if _strictly_greater(mu_rb, mu_bc) and _strictly_greater(mu_bc, mu_b):
        return ProtocolClass.Certifiable
    if _strictly_greater(mu_rb, mu_b) and not _strictly_greater(mu_bc, mu_b):
        return ProtocolClass.NotCertifiable
    if _strictly_greater(mu_bc, mu_b):
        return ProtocolClass.WrongSwapping
    return ProtocolClass.NoSwapping


def inseparability_bound(mu_x: float, mu_y: float) -> float:
    """Purity threshold: a two-party Gaussian state with marginal purities
    (mu_x, mu_y) is entangled iff its global purity exceeds
    mu_x mu_y / sqrt(mu_x^2 + mu_y^2 - mu_x^2 mu_y^2).
    """
    for v in (mu_x, mu_y):
        if not 0.0 < v <= 1.0 + 1e-12:
            raise ValueError(f"purity out of range (0, 1]: {v}")
    return mu_x * mu_y / np.sqrt(mu_x ** 2 + mu_y ** 2 - (mu_x * mu_y) ** 2)