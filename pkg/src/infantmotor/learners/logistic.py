"""L2-regularised, sample-weighted logistic regression fitted by damped Newton."""
from __future__ import annotations

import numpy as np

from ..core import InfantMotorError
from .scaling import Standardizer


class ConvergenceError(InfantMotorError, RuntimeError):
    def __init__(self, message, grad_norm=None, violations=None):
        super().__init__(message)
        self.grad_norm = grad_norm
        self.violations = violations


def _design(Z):
    return np.hstack([np.ones((len(Z), 1)), Z])


def objective(theta, Z, y, w, l2_lambda):
    """Weighted negative log-likelihood plus (lambda/2)|coef|^2; theta[0] is the intercept."""
    eta = _design(Z) @ theta
    nll = np.sum(w * (np.logaddexp(0.0, eta) - y * eta))
    return nll + 0.5 * l2_lambda * np.dot(theta[1:], theta[1:])


def gradient(theta, Z, y, w, l2_lambda):
    A = _design(Z)
    p = 1.0 / (1.0 + np.exp(-(A @ theta)))
    g = A.T @ (w * (p - y))
    g[1:] += l2_lambda * theta[1:]
    return g


def hessian(theta, Z, y, w, l2_lambda):
    A = _design(Z)
    p = 1.0 / (1.0 + np.exp(-(A @ theta)))
    H = A.T @ (A * (w * p * (1.0 - p))[:, None])
    H[1:, 1:] += l2_lambda * np.eye(len(theta) - 1)
    return H


class LogisticRegression:
    def __init__(self, l2_lambda=1.0, max_iter=100, tol=1e-8):
        if l2_lambda < 0:
            raise ValueError("l2_lambda must be >= 0")
        self.l2_lambda = float(l2_lambda)
        self.max_iter = int(max_iter)
        self.tol = float(tol)

    def fit(self, X, y, w, feature_names=None):
        y = np.asarray(y, dtype=float)
        w = np.asarray(w, dtype=float)
        self.scaler = Standardizer().fit(X)
        Z = self.scaler.transform(X)
        active = ~self.scaler.constant
        Za = Z[:, active]

        theta = np.zeros(Za.shape[1] + 1)
        lam = self.l2_lambda
        f = objective(theta, Za, y, w, lam)
        g = gradient(theta, Za, y, w, lam)
        gnorm = float(np.linalg.norm(g))
        it = 0
        while gnorm > self.tol:
            if it >= self.max_iter:
                raise ConvergenceError(
                    f"logistic regression did not converge in {self.max_iter} iterations "
                    f"(gradient norm {gnorm:.3g})", grad_norm=gnorm)
            H = hessian(theta, Za, y, w, lam)
            try:
                step = np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(H, g, rcond=None)[0]
            t = 1.0
            while True:
                cand = theta - t * step
                fc = objective(cand, Za, y, w, lam)
                if fc <= f - 1e-4 * t * np.dot(g, step) + 1e-13 * abs(f) or t < 1e-10:
                    break
                t *= 0.5
            theta, f = cand, fc
            g = gradient(theta, Za, y, w, lam)
            gnorm = float(np.linalg.norm(g))
            it += 1

        self.intercept = float(theta[0])
        self.coef = np.zeros(Z.shape[1])
        self.coef[active] = theta[1:]
        self.n_iter = it
        self.grad_norm = gnorm
        return self

    def decision_function(self, X):
        return self.scaler.transform(X) @ self.coef + self.intercept

    def predict_proba(self, X):
        return 1.0 / (1.0 + np.exp(-self.decision_function(X)))

    def predict(self, X):
        # p >= 0.5 exactly when the log-odds are >= 0; ties go to AR
        return (self.decision_function(X) >= 0.0).astype(int)

    def feature_importances(self):
        return np.abs(self.coef)

    def to_state(self):
        return {"scaler": self.scaler.to_state(), "coef": self.coef.tolist(), "intercept": self.intercept}

    @classmethod
    def from_state(cls, state, **params):
        m = cls(**params)
        m.scaler = Standardizer.from_state(state["scaler"])
        m.coef = np.asarray(state["coef"], dtype=float)
        m.intercept = float(state["intercept"])
        return m
