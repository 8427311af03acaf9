"""Shared generators and oracle paths for the test suite."""
import numpy as np
from scipy.linalg import block_diag, expm

from cvswap import gaussian
from cvswap.gaussian import GaussianState, beam_splitter, homodyne_condition
from cvswap.optomech import OptomechParams
from cvswap.protocol import TripartiteCM

OMEGA_M = 2 * np.pi * 1e7

Z2 = np.diag([1.0, -1.0])


def random_symplectic(rng, n_modes, scale=0.4):
    """exp(J H) with symmetric H is symplectic; scale keeps conditioning sane."""
    dim = 2 * n_modes
    h = rng.normal(size=(dim, dim))
    h = scale * 0.5 * (h + h.T)
    return expm(gaussian.symplectic_form(n_modes) @ h)


def random_cm(rng, n_modes, max_excess=2.0):
    """Random physical CM by construction: S diag(nu) S^T with nu >= 1/2."""
    nu = 0.5 + rng.uniform(0.0, max_excess, n_modes)
    s = random_symplectic(rng, n_modes)
    v = s @ np.diag(np.repeat(nu, 2)) @ s.T
    return 0.5 * (v + v.T)


def random_tripartite(rng):
    return TripartiteCM.from_matrix(random_cm(rng, 3))


def tms_symplectic(n_modes, i, j, r):
    """Two-mode squeezing between modes i and j."""
    s = np.eye(2 * n_modes)
    ch, sh = np.cosh(r), np.sinh(r)
    s[2 * i:2 * i + 2, 2 * i:2 * i + 2] = ch * np.eye(2)
    s[2 * j:2 * j + 2, 2 * j:2 * j + 2] = ch * np.eye(2)
    s[2 * i:2 * i + 2, 2 * j:2 * j + 2] = sh * Z2
    s[2 * j:2 * j + 2, 2 * i:2 * i + 2] = sh * Z2
    return s


def circuit_standard_state(rng):
    """Standard-form tripartite state from a two-stage squeezing circuit.

    Thermal inputs through TMS(a,b) then TMS(b,c) stay exactly in the
    diagonal-block zero pattern (all cross blocks diagonal, so the
    off-diagonal Bell-certifying covariance is zero), and roughly one in
    eight draws lands in the certifying region.
    """
    occ = 0.5 + rng.uniform(0.0, 0.4, 3)
    v0 = np.diag(np.repeat(occ, 2))
    s1 = tms_symplectic(3, 0, 1, rng.uniform(0.1, 1.2))
    s2 = tms_symplectic(3, 1, 2, rng.uniform(0.1, 1.2))
    v = s2 @ s1 @ v0 @ s1.T @ s2.T
    return TripartiteCM.from_matrix(0.5 * (v + v.T))


def swap_via_gaussian(V1, V2, outcomes=(0.0, 0.0)):
    """Bell measurement through the generic one-step primitives.

    Joins the two sites as (a1, b1, c1, a2, b2, c2), interferes the Bell
    modes, measures x on the minus output and p on the plus output, and
    reorders the survivors to the protocol-internal (a1, a2, c1, c2).
    """
    cm = block_diag(V1.matrix(), V2.matrix())
    state = GaussianState(cm, np.zeros(12))
    state = beam_splitter(state, 1, 4)
    state = homodyne_condition(state, 1, "x", outcomes[0])
    # survivors (a1, c1, a2, b_plus, c2): the plus output sits at index 3
    state = homodyne_condition(state, 3, "p", outcomes[1])
    return gaussian.partial_trace(state, [0, 2, 1, 3])


def drive_params(kappa_over_wm=0.7, tau_b_wm=8.0, P_b=4e-3, P_c=4.5e-3,
                 tau_ratio=6.0):
    """Operating-point parameters of the decay-rate/filter-time sweep."""
    return OptomechParams(
        L=1e-3, m=1e-11, omega_m=OMEGA_M, Q_m=1e5, T=0.4,
        lambda_b=810.045e-9, lambda_c=810.373e-9, P_b=P_b, P_c=P_c,
        kappa_b=kappa_over_wm * OMEGA_M, kappa_c=kappa_over_wm * OMEGA_M,
        Delta_b=-OMEGA_M, Delta_c=+OMEGA_M,
        Omega_b=-OMEGA_M, Omega_c=+OMEGA_M,
        tau_b=tau_b_wm / OMEGA_M, tau_c=tau_b_wm / OMEGA_M / tau_ratio)


def low_power_params(P_b=2e-3, tau_b_wm=15.0):
    """Operating-point parameters of the power/filter-time sweep."""
    return drive_params(kappa_over_wm=0.5, tau_b_wm=tau_b_wm, P_b=P_b,
                        P_c=P_b + 0.5e-3, tau_ratio=5.0)