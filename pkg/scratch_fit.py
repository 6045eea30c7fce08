"""Fit the true 3-term coefficients of w_j = c1 w_{j-1} + cA A^HA w_{j-1} + c2 w_{j-2}
from an actual LSQR run, and compare with the printed-formula predictions."""
import numpy as np

rng = np.random.default_rng(1)
mn = 30
h = (rng.standard_normal((mn, mn)) + 1j * rng.standard_normal((mn, mn))) / np.sqrt(mn)
y = rng.standard_normal(mn) + 1j * rng.standard_normal(mn)
sigma2 = 0.1
sigma = np.sqrt(sigma2)
gram = h.conj().T @ h + sigma2 * np.eye(mn)

# hand-rolled damped LSQR (P-S convention), recording everything
beta0 = np.linalg.norm(y)
u_t, u_b = y / beta0, np.zeros(mn, dtype=complex)
v = h.conj().T @ u_t
a0 = np.linalg.norm(v)
v /= a0
w = v.copy()
x = np.zeros(mn, dtype=complex)
phibar, rhobar = beta0, a0
a_prev = a0

ws = [w.copy()]          # w_0, w_1, ...
scal = {"zeta": {}, "psi": {}, "pi": {0: rhobar * phibar},
        "rhobar": {0: rhobar}, "phibar": {0: phibar}}

for k in range(1, 13):
    t_top = h @ v - a_prev * u_t
    t_bot = sigma * v - a_prev * u_b
    beta = np.sqrt(np.linalg.norm(t_top) ** 2 + np.linalg.norm(t_bot) ** 2)
    u_t, u_b = t_top / beta, t_bot / beta
    t_v = h.conj().T @ u_t + sigma * u_b - beta * v
    a = np.linalg.norm(t_v)
    v = t_v / a
    rho = np.hypot(rhobar, beta)
    z, s = rhobar / rho, beta / rho
    theta = s * a
    phi = z * phibar
    zeta, psi = phi / rho, theta / rho
    phibar = s * phibar
    rhobar = -z * a
    x = x + zeta * w
    w = v - psi * w
    ws.append(w.copy())
    scal["zeta"][k] = zeta
    scal["psi"][k] = psi
    scal["pi"][k] = rhobar * phibar
    scal["rhobar"][k] = rhobar
    scal["phibar"][k] = phibar
    a_prev = a

pi = lambda k: scal["pi"].get(k, 1.0)
zeta = lambda k: 1.0 if k == 0 else scal["zeta"][k]
psi = lambda k: 0.0 if k <= 0 else scal["psi"][k]

print(" j |   c1_true    c1_form |   cA_true    cA_form |   c2_true    c2_form")
for j in range(2, 11):
    target = ws[j]
    basis = np.stack([ws[j - 1], gram @ ws[j - 1], ws[j - 2]], axis=1)
    coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
    resid = np.linalg.norm(basis @ coef - target)
    c1f = pi(j - 1) * (1 + psi(j) ** 2) / pi(j)
    cAf = -zeta(j) / pi(j)
    c2f = psi(j - 1) ** 2 * pi(j - 2) / pi(j)
    c1, cA, c2 = coef.real
    print(f"{j:2d} | {c1:+.5f} {c1f:+.5f} | {cA:+.5f} {cAf:+.5f} | {c2:+.5f} {c2f:+.5f}"
          f"   fit_resid={resid:.1e} imag={np.abs(coef.imag).max():.1e}")
