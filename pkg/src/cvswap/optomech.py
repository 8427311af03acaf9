"""Linearized cavity-optomechanics model of the tripartite source.

A single mechanical mode couples to two driven cavity modes (branches b and
c). Linearizing the quantum Langevin equations around the classical steady
state gives a 6x6 drift matrix over (q, p, x_b, y_b, x_c, y_c). The
stationary covariance matrix of (mechanical mode, filtered b output,
filtered c output) is a frequency integral over the noise spectra, with
causal single-pole filters of time tau_k centered at Omega_k selecting one
temporal output mode per branch.

All public operations take SI inputs (rad/s, seconds, kelvin, watts);
internally everything is scaled by the mechanical frequency before the
integration for conditioning.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from .protocol import TripartiteCM

HBAR = 1.054571817e-34      # J s
KB = 1.380649e-23           # J / K
C_LIGHT = 299792458.0       # m / s

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-12

# transform-convention regression guard: the complex integrand must satisfy
# f(-w) = conj(f(w)); the residue is checked against this bound
IMAG_RESIDUE_TOL = 1e-10


class StabilityError(RuntimeError):
    """Drift matrix has a non-negative spectral abscissa."""


class QuadratureConvergenceError(RuntimeError):
    """Spectral integral failed its accuracy target."""


@dataclass(frozen=True)
class OptomechParams:
    """Physical parameters of one two-drive optomechanical site (SI units)."""

    L: float                # cavity length, m
    m: float                # effective mass, kg
    omega_m: float          # mechanical angular frequency, rad/s
    Q_m: float              # mechanical quality factor
    T: float                # bath temperature, K
    lambda_b: float         # drive wavelength, branch b, m
    lambda_c: float         # drive wavelength, branch c, m
    P_b: float              # input power, branch b, W
    P_c: float              # input power, branch c, W
    kappa_b: float          # cavity decay rate, branch b, rad/s
    kappa_c: float          # cavity decay rate, branch c, rad/s
    Delta_b: float          # effective detuning, branch b, rad/s (signed)
    Delta_c: float          # effective detuning, branch c, rad/s (signed)
    Omega_b: float          # filter center, branch b, rad/s (signed)
    Omega_c: float          # filter center, branch c, rad/s (signed)
    tau_b: float            # filter time, branch b, s
    tau_c: float            # filter time, branch c, s

    def __post_init__(self):
        positive = ("L", "m", "omega_m", "T", "lambda_b", "lambda_c",
                    "kappa_b", "kappa_c", "tau_b", "tau_c")
        for name in positive:
            v = float(getattr(self, name))
            if not v > 0.0 or not np.isfinite(v):
                raise ValueError(f"{name} must be positive, got {v}")
            object.__setattr__(self, name, v)
        for name in ("P_b", "P_c"):
            v = float(getattr(self, name))
            if v < 0.0 or not np.isfinite(v):
                raise ValueError(f"{name} must be >= 0, got {v}")
            object.__setattr__(self, name, v)
        for name in ("Delta_b", "Delta_c", "Omega_b", "Omega_c", "Q_m"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if not self.Q_m > 1.0:
            raise ValueError(f"Q_m must exceed 1, got {self.Q_m}")

    @property
    def gamma_m(self) -> float:
        """Mechanical damping rate, omega_m / Q_m."""
        return self.omega_m / self.Q_m

    def branch(self, branch: str) -> tuple:
        """(wavelength, power, kappa, Delta, Omega, tau) of one branch."""
        if branch == "b":
            return (self.lambda_b, self.P_b, self.kappa_b, self.Delta_b,
                    self.Omega_b, self.tau_b)
        if branch == "c":
            return (self.lambda_c, self.P_c, self.kappa_c, self.Delta_c,
                    self.Omega_c, self.tau_c)
        raise ValueError(f"branch must be 'b' or 'c', got {branch!r}")


@dataclass(frozen=True)
class LinearizedModel:
    """Steady state and linearized drift of one site."""

    K: np.ndarray           # 6x6 drift matrix, rad/s
    G_b: float              # effective coupling, rad/s
    G_c: float              # effective coupling, rad/s
    a_s: np.ndarray         # steady intracavity amplitudes (b, c), complex
    q_s: float              # steady mechanical displacement, dimensionless
    stable: bool

    def __post_init__(self):
        k = np.asarray(self.K, dtype=float)
        if k.shape != (6, 6):
            raise ValueError(f"K must be 6x6, got {k.shape}")
        k = k.copy()
        k.setflags(write=False)
        object.__setattr__(self, "K", k)
        a = np.asarray(self.a_s, dtype=complex).reshape(2).copy()
        a.setflags(write=False)
        object.__setattr__(self, "a_s", a)


def single_photon_coupling(params: OptomechParams, branch: str) -> float:
    """Vacuum optomechanical coupling (omega_cavity/L) sqrt(hbar/(m omega_m))."""
    lam = params.branch(branch)[0]
    omega_cav = 2.0 * np.pi * C_LIGHT / lam
    return (omega_cav / params.L) * np.sqrt(
        HBAR / (params.m * params.omega_m))


def drive_rate(params: OptomechParams, branch: str) -> float:
    """Cavity driving rate |E| = sqrt(2 kappa P / (hbar omega_laser))."""
    lam, power, kappa = params.branch(branch)[:3]
    omega_laser = 2.0 * np.pi * C_LIGHT / lam
    return np.sqrt(2.0 * kappa * power / (HBAR * omega_laser))


def build_drift_matrix(omega_m: float, gamma_m: float, G_b: float,
                       G_c: float, kappa_b: float, kappa_c: float,
                       Delta_b: float, Delta_c: float) -> np.ndarray:
    """Drift matrix over (q, p, x_b, y_b, x_c, y_c), all rates in rad/s.

    The intracavity phase reference per branch makes the steady amplitude
    real, which puts each coupling G_k in the (p, x_k) and (y_k, q) slots.
    """
    return np.array([
        [0.0, omega_m, 0.0, 0.0, 0.0, 0.0],
        [-omega_m, -gamma_m, G_b, 0.0, G_c, 0.0],
        [0.0, 0.0, -kappa_b, Delta_b, 0.0, 0.0],
        [G_b, 0.0, -Delta_b, -kappa_b, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, -kappa_c, Delta_c],
        [G_c, 0.0, 0.0, 0.0, -Delta_c, -kappa_c],
    ])


def check_stability(K: np.ndarray) -> tuple:
    """(stable, spectral_abscissa): stable iff max Re eig(K) < 0."""
    abscissa = float(np.max(np.linalg.eigvals(np.asarray(K, dtype=float)).real))
    return abscissa < 0.0, abscissa


def steady_state(params: OptomechParams) -> LinearizedModel:
    """Classical steady state and the linearized model built on it.

    Amplitudes use the given effective detunings directly (no
    self-consistent cavity-pull loop); the couplings absorb the amplitude
    phase, G_k = sqrt(2) G_0k |a_sk|.
    """
    amps = []
    g_eff = []
    q_s = 0.0
    for br in ("b", "c"):
        _, _, kappa, delta = params.branch(br)[:4]
        e_k = drive_rate(params, br)
        a_k = e_k / (kappa + 1j * delta)
        g0 = single_photon_coupling(params, br)
        amps.append(a_k)
        g_eff.append(np.sqrt(2.0) * g0 * abs(a_k))
        q_s += g0 * abs(a_k) ** 2 / params.omega_m
    k = build_drift_matrix(params.omega_m, params.gamma_m, g_eff[0], g_eff[1],
                           params.kappa_b, params.kappa_c,
                           params.Delta_b, params.Delta_c)
    stable, _ = check_stability(k)
    return LinearizedModel(K=k, G_b=g_eff[0], G_c=g_eff[1],
                           a_s=np.array(amps), q_s=q_s, stable=stable)


def n_thermal(params: OptomechParams) -> float:
    """Mean thermal occupation of the mechanical bath."""
    return 1.0 / np.expm1(HBAR * params.omega_m / (KB * params.T))


def _x_coth(x: float, theta: float) -> float:
    """x * coth(theta x / 2), series-stabilized through x = 0 (limit 2/theta)."""
    a = 0.5 * theta * x
    if abs(a) < 1e-4:
        return (2.0 / theta) * (1.0 + a * a / 3.0)
    return x / np.tanh(a)


def diffusion_matrix(omega: float, params: OptomechParams) -> np.ndarray:
    """Diagonal noise spectral weights at angular frequency omega (rad/s).

    Mechanical momentum entry gamma_m (omega/omega_m) coth(hbar omega/2kT),
    continuous at omega = 0 with limit 2 gamma_m kB T/(hbar omega_m);
    optical entries are the decay rates, frequency independent.
    """
    theta = HBAR * params.omega_m / (KB * params.T)
    mech = params.gamma_m * _x_coth(omega / params.omega_m, theta)
    return np.diag([0.0, mech, params.kappa_b, params.kappa_b,
                    params.kappa_c, params.kappa_c])


def filter_fourier(omega: float, tau: float, center: float) -> complex:
    """Analysis transform of the causal filter sqrt(2/tau) e^(i center t - t/tau)."""
    return np.sqrt(2.0 / tau) / (1.0 / tau + 1j * (center - omega))


def filter_transfer(omega: float, params: OptomechParams,
                    branch: str) -> np.ndarray:
    """Frequency-domain 2x2 quadrature block of one branch's output filter,
    including the sqrt(2 kappa) input-output prefactor.

    The time-domain kernel is real, built from Re h(t) and Im h(t); their
    transforms are h_plus = (h(w) + h(-w)*)/2 and h_minus = (h(w) - h(-w)*)/2i,
    so the block is complex at real frequencies.
    """
    _, _, kappa, _, center, tau = params.branch(branch)
    return np.sqrt(2.0 * kappa) * _filter_block(omega, tau, center)


def _filter_block(omega: float, tau: float, center: float) -> np.ndarray:
    h_here = filter_fourier(omega, tau, center)
    h_conj = np.conj(filter_fourier(-omega, tau, center))
    hp = 0.5 * (h_here + h_conj)
    hm = (h_here - h_conj) / 2j
    return np.array([[hp, -hm], [hm, hp]])


def default_window(params: OptomechParams) -> float:
    """Integration half-window in units of omega_m.

    Covers the resonances and filter bandwidths (20x rule) and the thermal
    plateau of the Brownian noise, whose coth crossover sits at
    2 kB T / hbar, far above the mechanical frequency at cryogenic
    temperatures but cheap to include.
    """
    w = params.omega_m
    theta = HBAR * w / (KB * params.T)
    rates = max(params.kappa_b / w, params.kappa_c / w,
                1.0 / (params.tau_b * w), 1.0 / (params.tau_c * w))
    detunings = max(abs(params.Delta_b), abs(params.Delta_c)) / w
    return max(50.0, 20.0 * rates + detunings, 3.2 / theta)


def output_cm(params: OptomechParams, rtol: float = DEFAULT_RTOL,
              atol: float = DEFAULT_ATOL, window: float | None = None,
              quad_limit: int | None = None) -> TripartiteCM:
    """Stationary CM of (mechanical, filtered b output, filtered c output).

    Integrates the noise-spectrum matrix against the filter transfer blocks
    over a symmetric frequency window. The flat optical floor (which alone
    integrates to the vacuum 1/2 by the filter normalization) is taken out
    of the quadrature and added back exactly, so the numerical integrand
    decays fast and the window truncation error sits far below rtol.

    window is the half-width in units of omega_m (defaults to
    default_window); quad_limit caps the number of adaptive subdivisions.

    Raises StabilityError for an unstable drift matrix and
    QuadratureConvergenceError when the integral cannot reach its target or
    the integrand breaks its conjugate symmetry (transform-convention guard).
    """
    model = steady_state(params)
    if not model.stable:
        _, absc = check_stability(model.K)
        raise StabilityError(
            f"drift matrix unstable: spectral abscissa {absc:.6e} rad/s")

    w_m = params.omega_m
    k = model.K / w_m
    kb = params.kappa_b / w_m
    kc = params.kappa_c / w_m
    tau_b = params.tau_b * w_m
    tau_c = params.tau_c * w_m
    om_b = params.Omega_b / w_m
    om_c = params.Omega_c / w_m
    gam = 1.0 / params.Q_m
    theta = HBAR * w_m / (KB * params.T)
    half_width = float(window) if window is not None else default_window(params)

    p_floor = np.diag([0.0, 0.0, 0.5 / kb, 0.5 / kb, 0.5 / kc, 0.5 / kc])
    eye6 = np.eye(6)

    def spectrum(w: float) -> np.ndarray:
        resolvent = np.linalg.inv(1j * w * eye6 + k)
        q = np.diag([0.0, gam * _x_coth(w, theta), kb, kb, kc, kc])
        x = resolvent + p_floor
        core = x @ q @ x.conj().T - p_floor @ q @ p_floor
        t = np.zeros((6, 6), dtype=complex)
        t[0:2, 0:2] = np.eye(2)
        t[2:4, 2:4] = np.sqrt(2.0 * kb) * _filter_block(w, tau_b, om_b)
        t[4:6, 4:6] = np.sqrt(2.0 * kc) * _filter_block(w, tau_c, om_c)
        return t @ core @ t.conj().T

    # the full-line integrand pairs (w, -w) into conjugates, so the value is
    # 2 Re over the half line; verify the pairing instead of assuming it
    residue = 0.0
    for probe in (0.37, 1.0, 0.5 * half_width):
        g_pos = spectrum(probe)
        g_neg = spectrum(-probe)
        scale = max(float(np.max(np.abs(g_pos))), 1e-300)
        residue = max(residue,
                      float(np.max(np.abs(g_neg - np.conj(g_pos)))) / scale)
    if residue > IMAG_RESIDUE_TOL:
        raise QuadratureConvergenceError(
            f"integrand conjugate-symmetry residue {residue:.3e} exceeds "
            f"{IMAG_RESIDUE_TOL}")

    def integrand(w: float) -> np.ndarray:
        return np.real(spectrum(w)) / np.pi

    breakpoints = sorted({1.0, abs(om_b), abs(om_c),
                          abs(params.Delta_b / w_m),
                          abs(params.Delta_c / w_m)} - {0.0})
    kwargs = {}
    if quad_limit is not None:
        kwargs["limit"] = quad_limit
    res, err = quad_vec(integrand, 0.0, half_width, epsrel=rtol, epsabs=atol,
                        points=breakpoints, norm="max", quadrature="gk21",
                        **kwargs)
    target = max(atol, rtol * float(np.max(np.abs(res))))
    if err > 10.0 * target:
        raise QuadratureConvergenceError(
            f"achieved error estimate {err:.3e} exceeds target {target:.3e}")

    # exact integral of the subtracted optical floor: each filter is
    # normalized, so the floor contributes the vacuum variance 1/2
    res = res + np.diag([0.0, 0.0, 0.5, 0.5, 0.5, 0.5])
    cm = 0.5 * (res + res.T)
    return TripartiteCM.from_matrix(cm)