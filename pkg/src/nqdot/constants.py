"""Physical constants and unit conventions.

Interface units throughout the package:

    lengths            nm   (scattering lengths: fm at the data boundary)
    energies           ueV
    times              ms   (absorption lifetimes)
    wavevectors        1/nm
    cell volumes       A^3  (crystallographic convention at the data boundary)

Everything below is derived from CODATA 2018 values (exact SI definitions
where applicable) rather than copied from secondary sources, so the ledger
hash pins the full numeric provenance of any output file.
"""

import hashlib

from scipy.constants import e as _e_charge  # C, exact
from scipy.constants import epsilon_0 as _eps0  # F/m
from scipy.constants import hbar as _hbar_si  # J*s, exact
from scipy.constants import m_n as _m_n_si  # kg

# --- SI base values ---------------------------------------------------------
HBAR_SI = _hbar_si            # J*s
M_N_SI = _m_n_si              # kg
EV_SI = _e_charge             # J per eV
EPS0_SI = _eps0               # F/m

# --- derived, in interface units --------------------------------------------
# hbar^2 / (2 m_n):  J*m^2 -> ueV*nm^2  (x 1e6/eV for ueV, x 1e18 for nm^2)
HBAR2_OVER_2MN = HBAR_SI**2 / (2.0 * M_N_SI) / EV_SI * 1e6 * 1e18  # ueV*nm^2

# hbar in ueV*ms (x 1e6 for ueV, x 1e3 for ms)
HBAR_UEV_MS = HBAR_SI / EV_SI * 1e6 * 1e3  # ueV*ms

# hbar in ueV*s (transition frequencies omega = dE/hbar in rad/s)
HBAR_UEV_S = HBAR_SI / EV_SI * 1e6  # ueV*s

# Absorption-rate prefactor: 1/T = 4*pi*(hbar/m_n) * sum_im / cell volume,
# with sum_im in fm (1e-15 m) and the volume in A^3 (1e-30 m^3); the factor
# below yields the rate in 1/ms.
ABSORPTION_RATE_PER_FM_A3 = (
    4.0 * 3.141592653589793 * (HBAR_SI / M_N_SI) * 1e-15 / 1e-30 / 1e3
)  # (1/ms) per (fm/A^3)

# Im[b] = sigma_a * k0 / (4 pi) at the thermal reference speed 2200 m/s;
# sigma_a in barn (100 fm^2), k0 = m_n * v0 / hbar.
THERMAL_SPEED = 2200.0  # m/s, tabulation reference
K0_THERMAL_FM = M_N_SI * THERMAL_SPEED / HBAR_SI * 1e-15  # 1/fm
IM_B_PER_BARN = 100.0 * K0_THERMAL_FM / (4.0 * 3.141592653589793)  # fm per barn

# Unit bridges used by the transition/drive module (SI internally there).
NM = 1e-9        # m
UEV_TO_J = EV_SI * 1e-6
KV_PER_CM = 1e5  # V/m


def ledger() -> dict:
    """Constants ledger: every derived value that can influence an output."""
    return {
        "hbar_si_J_s": HBAR_SI,
        "m_n_si_kg": M_N_SI,
        "eV_si_J": EV_SI,
        "eps0_si_F_m": EPS0_SI,
        "hbar2_over_2mn_ueV_nm2": HBAR2_OVER_2MN,
        "hbar_ueV_ms": HBAR_UEV_MS,
        "absorption_rate_per_fm_A3_inv_ms": ABSORPTION_RATE_PER_FM_A3,
        "im_b_per_barn_fm": IM_B_PER_BARN,
        "thermal_speed_m_s": THERMAL_SPEED,
    }


def ledger_hash() -> str:
    """Short hash of the constants ledger, embedded in output metadata."""
    payload = ",".join(f"{k}={v!r}" for k, v in sorted(ledger().items()))
    return hashlib.sha256(payload.encode()).hexdigest()[:12]
