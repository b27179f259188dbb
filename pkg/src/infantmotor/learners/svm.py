"""Soft-margin SVM trained by sequential minimal optimisation.

The working pair is the maximal KKT violating pair; each step solves the
two-variable subproblem analytically. Sample weights scale the box
constraint per sample (C_i = C * w_i), which is how class balancing enters.
"""
from __future__ import annotations

import numpy as np

from .logistic import ConvergenceError
from .scaling import Standardizer

ALPHA_EPS = 1e-12


def kernel_matrix(A, B, kernel="linear", gamma=1.0):
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


def smo(K, y_pm, C_box, tol=1e-3, max_iter=100000):
    """Solve the SVM dual for a precomputed kernel.

    Parameters
    ----------
    K : (n, n) kernel matrix
    y_pm : labels in {-1, +1}
    C_box : per-sample upper bounds
    tol : stop once the maximal KKT violation is at most ``tol``

    Returns ``(alpha, b, n_iter)``. Raises ConvergenceError when ``max_iter``
    pair updates are not enough.
    """
    n = len(y_pm)
    y = y_pm.astype(float)
    alpha = np.zeros(n)
    # F_t = sum_s alpha_s y_s K_ts - y_t, i.e. the error E_t without the bias
    F = -y.copy()
    diag = np.diag(K)
    it = 0
    while True:
        up = ((y > 0) & (alpha < C_box - ALPHA_EPS)) | ((y < 0) & (alpha > ALPHA_EPS))
        low = ((y < 0) & (alpha < C_box - ALPHA_EPS)) | ((y > 0) & (alpha > ALPHA_EPS))
        if not up.any() or not low.any():
            break
        Fu = np.where(up, F, np.inf)
        Fl = np.where(low, F, -np.inf)
        i = int(np.argmin(Fu))
        j = int(np.argmax(Fl))
        gap = F[j] - F[i]
        if gap <= tol:
            break
        if it >= max_iter:
            violations = int((Fl > F[i] + tol).sum())
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} updates ({violations} KKT violators)",
                violations=violations)
        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], 1e-12)
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            L, H = max(0.0, aj - ai), min(C_box[j], C_box[i] + aj - ai)
        else:
            L, H = max(0.0, ai + aj - C_box[i]), min(C_box[j], ai + aj)
        aj_new = min(max(aj + y[j] * (F[i] - F[j]) / eta, L), H)
        ai_new = ai + y[i] * y[j] * (aj - aj_new)
        ai_new = min(max(ai_new, 0.0), C_box[i])
        di, dj = ai_new - ai, aj_new - aj
        alpha[i], alpha[j] = ai_new, aj_new
        F += di * y[i] * K[:, i] + dj * y[j] * K[:, j]
        it += 1

    free = (alpha > ALPHA_EPS) & (alpha < C_box - ALPHA_EPS)
    if free.any():
        b = float(-F[free].mean())
    else:
        up = ((y > 0) & (alpha < C_box - ALPHA_EPS)) | ((y < 0) & (alpha > ALPHA_EPS))
        low = ((y < 0) & (alpha < C_box - ALPHA_EPS)) | ((y > 0) & (alpha > ALPHA_EPS))
        lo = F[up].min() if up.any() else F[low].max()
        hi = F[low].max() if low.any() else F[up].min()
        b = float(-(lo + hi) / 2.0)
    return alpha, b, it


class SVM:
    """Binary SVM on standardised features; AR is the +1 class."""

    def __init__(self, C=1.0, kernel="rbf", gamma="auto", tol=1e-3, max_passes=1000):
        if not C > 0:
            raise ValueError("C must be positive")
        self.C = float(C)
        self.kernel = kernel
        self.gamma = gamma
        self.tol = float(tol)
        self.max_passes = int(max_passes)

    def _gamma(self, d):
        if self.gamma in (None, "auto"):
            return 1.0 / max(d, 1)
        return float(self.gamma)

    def fit(self, X, y, w, feature_names=None):
        self.scaler = Standardizer().fit(X)
        Z = self.scaler.transform(X)
        self.gamma_ = self._gamma(Z.shape[1])
        y_pm = np.where(np.asarray(y) == 1, 1.0, -1.0)
        K = kernel_matrix(Z, Z, self.kernel, self.gamma_)
        self.C_box = self.C * np.asarray(w, dtype=float)
        alpha, b, it = smo(K, y_pm, self.C_box, self.tol, self.max_passes * max(len(y_pm), 1))
        sv = alpha > ALPHA_EPS
        self.alpha_all = alpha
        self.support = Z[sv]
        self.dual_coef = alpha[sv] * y_pm[sv]
        self.b = b
        self.n_iter = it
        return self

    def decision_function(self, X):
        Z = self.scaler.transform(X)
        if len(self.dual_coef) == 0:
            return np.full(len(Z), self.b)
        return kernel_matrix(Z, self.support, self.kernel, self.gamma_) @ self.dual_coef + self.b

    def predict(self, X):
        return (self.decision_function(X) >= 0.0).astype(int)

    def linear_weights(self):
        """Primal ``(w, b)`` in the original feature units (linear kernel only)."""
        if self.kernel != "linear":
            raise ValueError("primal weights exist only for the linear kernel")
        wz = self.dual_coef @ self.support if len(self.dual_coef) else np.zeros(len(self.scaler.mean))
        w = wz / self.scaler.scale
        return w, float(self.b - np.dot(w, self.scaler.mean))

    def feature_importances(self):
        if self.kernel != "linear":
            return None
        wz = self.dual_coef @ self.support if len(self.dual_coef) else np.zeros(len(self.scaler.mean))
        return np.abs(wz)

    def to_state(self):
        return {
            "scaler": self.scaler.to_state(),
            "gamma": self.gamma_,
            "support": self.support.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "b": self.b,
        }

    @classmethod
    def from_state(cls, state, **params):
        m = cls(**params)
        m.scaler = Standardizer.from_state(state["scaler"])
        m.gamma_ = float(state["gamma"])
        m.support = np.asarray(state["support"], dtype=float).reshape(-1, len(m.scaler.mean))
        m.dual_coef = np.asarray(state["dual_coef"], dtype=float)
        m.b = float(state["b"])
        return m
