"""Scratch: verify mLSQR sign convention via x_k = W_k H^H y, convergence,
and the Omega/dense-W equivalence on an exactly-BCCB channel."""
import numpy as np

from otfssim.equalizer import (
    mlsqr_equalize, mmse_equalize, w_init_dense, w_update_dense,
    sinr_from_omega, BlockBandedOperator,
)
from otfssim.channel import (
    ChannelPath, ChannelRealization, build_dd_matrix, truncate,
)
from otfssim.grid_ops import bccb_to_tf_diagonal, is_bccb

rng = np.random.default_rng(0)

# --- 1. random dense system: x_k = W_k H^H y at every k -------------------
mn = 24
h = rng.standard_normal((mn, mn)) + 1j * rng.standard_normal((mn, mn))
h /= np.sqrt(mn)
y = rng.standard_normal(mn) + 1j * rng.standard_normal(mn)
sigma2 = 0.1

out = mlsqr_equalize(h, y, sigma2, max_iter=15, eps=0.0, trace=True)
gram = h.conj().T @ h + sigma2 * np.eye(mn)
hy = h.conj().T @ y

w = w_init_dense(out.scalars, mn)
w_hist = (w, np.zeros((mn, mn), dtype=complex), np.zeros((mn, mn), dtype=complex))
print("k   ||x_k - W_k H^H y|| / ||x_k||")
for k, xk in enumerate(out.x_trace, start=1):
    if k == 1:
        wk = w
    else:
        wk = w_update_dense(w_hist, out.scalars, k, gram)
        w_hist = (wk, w_hist[0], w_hist[1])
    err = np.linalg.norm(xk - wk @ hy) / np.linalg.norm(xk)
    print(f"{k:2d}  {err:.3e}")

# --- 2. convergence to damped direct solve --------------------------------
out2 = mlsqr_equalize(h, y, sigma2, max_iter=200, eps=1e-14)
x_direct = np.linalg.solve(gram, hy)
print("converged rel err:", np.linalg.norm(out2.x_hat - x_direct) / np.linalg.norm(x_direct),
      "iters:", out2.iterations_used)

# --- 3. BCCB channel: Omega vs dense W SINR -------------------------------
m, n = 4, 4
paths = [
    ChannelPath(gain=0.8, delay_s=0.0, doppler_hz=0.0),
    ChannelPath(gain=0.5j, delay_s=1.0, doppler_hz=1.0 / (n * (m + 1))),  # ts=1, mcp=1
    ChannelPath(gain=0.3, delay_s=1.0, doppler_hz=-2.0 / (n * (m + 1))),
]
ch = ChannelRealization(paths=tuple(paths), m=m, n=n, m_cp=1, ts_s=1.0, doppler_mode="block")
hdd = build_dd_matrix(ch)
print("is_bccb:", is_bccb(hdd, m, n))
trunc = truncate(hdd, 1, m, n)
op = BlockBandedOperator.from_truncated(trunc)
print("op dense == h_sig:", np.abs(op.to_dense() - trunc.h_sig).max())

y2 = rng.standard_normal(m * n) + 1j * rng.standard_normal(m * n)
sigma2 = 0.2
res = mlsqr_equalize(op, y2, sigma2, max_iter=20, eps=0.0, trace=True)
h_sig = trunc.h_sig
gram_d = h_sig.conj().T @ h_sig + sigma2 * np.eye(m * n)
h_tf = bccb_to_tf_diagonal(h_sig, m, n, check=False)
print("h_sig bccb:", is_bccb(h_sig, m, n))

w = w_init_dense(res.scalars, m * n)
w_hist = (w, np.zeros_like(w), np.zeros_like(w))
print("k   |dmu|        |dnu|      (dense Eq8/9 vs TF route)")
for k, om in enumerate(res.omega_trace, start=1):
    wk = w if k == 1 else w_update_dense(w_hist, res.scalars, k, gram_d)
    if k > 1:
        w_hist = (wk, w_hist[0], w_hist[1])
    g_dd = wk @ h_sig.conj().T @ h_sig
    c_dd = g_dd @ wk.conj().T
    mu_d = g_dd[0, 0].real
    nu_d = (np.abs(g_dd[0, 1:]) ** 2).sum() + c_dd[0, 0].real * sigma2
    mu_t, nu_t = sinr_from_omega(om, h_tf, sigma2)
    # also check x_k identity on the banded system
    xk_err = np.linalg.norm(res.x_trace[k - 1] - wk @ (h_sig.conj().T @ y2))
    print(f"{k:2d}  {abs(mu_d - mu_t):.3e}  {abs(nu_d - nu_t):.3e}   xk_err={xk_err:.3e}")

res_full = mlsqr_equalize(op, y2, sigma2, max_iter=300, eps=1e-13)
mm = mmse_equalize(h_sig, y2, sigma2)
print("mlsqr vs mmse x:", np.linalg.norm(res_full.x_hat - mm.x_hat) / np.linalg.norm(mm.x_hat))
print("mmse mu range:", mm.mu_tilde.min(), mm.mu_tilde.max(), " mlsqr mu:", res_full.mu_tilde[0])
print("mmse nu range:", mm.nu_tilde.min(), mm.nu_tilde.max(), " mlsqr nu:", res_full.nu_tilde[0])
