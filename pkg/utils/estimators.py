"""
Scikit-learn compatible regressors for algorithms the library does not ship
with the required solver, plus their loss and optimality diagnostics.
"""

from typing import Optional, Tuple

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from core.exceptions import ConvergenceError

MAD_TO_SIGMA = 0.6744897501960817

def _design(X: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(X.shape[0]), X])

class HuberIRLSRegressor(RegressorMixin, BaseEstimator):
    """
    Huber-loss linear regression solved by iteratively reweighted least squares.

    The residual scale is re-estimated every iteration with the normalized
    median absolute deviation; observations with |r / scale| > epsilon get
    weight epsilon / |r / scale|.

    :param epsilon: Huber threshold in scale units
    :param tol: stop when the coefficient step is below tol * (1 + |beta|)
    :param max_iter: iteration cap; exceeding it raises ConvergenceError
    """

    def __init__(self, epsilon: float = 1.35, tol: float = 1e-8, max_iter: int = 100):
        self.epsilon = epsilon
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        A = _design(X)
        beta = np.linalg.lstsq(A, y, rcond=None)[0]
        floor = 1e-12 * (1.0 + np.max(np.abs(y)))

        scale = 0.0
        step = np.inf
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            residual = y - A @ beta
            scale = np.median(np.abs(residual - np.median(residual))) / MAD_TO_SIGMA
            if scale <= floor:
                # exact fit on at least half the points
                step = 0.0
                break

            u = np.abs(residual) / scale
            weights = np.where(u <= self.epsilon, 1.0, self.epsilon / np.maximum(u, self.epsilon))
            root = np.sqrt(weights)
            beta_next = np.linalg.lstsq(A * root[:, None], y * root, rcond=None)[0]
            step = np.linalg.norm(beta_next - beta)
            beta = beta_next
            if step <= self.tol * (1.0 + np.linalg.norm(beta)):
                break
        else:
            raise ConvergenceError(
                "robust", self.max_iter,
                {"last_step_norm": float(step), "scale": float(scale), "coefficients": beta.tolist()}
            )

        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:]
        self.scale_ = float(scale)
        self.n_iter_ = n_iter
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_ + self.intercept_

def squared_loss_objective(coef: np.ndarray, intercept: float, X: np.ndarray, y: np.ndarray) -> float:
    """Mean halved squared error, the objective ScheduledSGDRegressor descends."""
    residual = X @ coef + intercept - y
    return 0.5 * float(np.mean(residual ** 2))

def squared_loss_gradient(
    coef: np.ndarray,
    intercept: float,
    X: np.ndarray,
    y: np.ndarray
) -> Tuple[np.ndarray, float]:
    """Analytic gradient of squared_loss_objective with respect to (coef, intercept)."""
    residual = X @ coef + intercept - y
    return X.T @ residual / X.shape[0], float(np.mean(residual))

class ScheduledSGDRegressor(RegressorMixin, BaseEstimator):
    """
    Plain per-sample stochastic gradient descent on the squared loss.

    Learning rate after t updates: eta0 / (1 + eta0 * decay * t).
    Samples are reshuffled every epoch from random_state.
    """

    def __init__(self, eta0: float = 0.01, decay: float = 1e-4, epochs: int = 100, random_state: Optional[int] = None):
        self.eta0 = eta0
        self.decay = decay
        self.epochs = epochs
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        rng = check_random_state(self.random_state)
        n_samples, n_features = X.shape

        coef = np.zeros(n_features)
        intercept = 0.0
        t = 0
        for epoch in range(self.epochs):
            for i in rng.permutation(n_samples):
                eta = self.eta0 / (1.0 + self.eta0 * self.decay * t)
                grad_coef, grad_intercept = squared_loss_gradient(coef, intercept, X[i:i + 1], y[i:i + 1])
                coef = coef - eta * grad_coef
                intercept -= eta * grad_intercept
                t += 1

            if not (np.all(np.isfinite(coef)) and np.isfinite(intercept)):
                raise ConvergenceError(
                    "sgd", epoch + 1,
                    {"reason": "diverged", "learning_rate": eta, "updates": t}
                )

        self.coef_ = coef
        self.intercept_ = float(intercept)
        self.loss_ = squared_loss_objective(coef, intercept, X, y)
        self.t_ = t
        self.n_iter_ = self.epochs
        self.n_features_in_ = n_features
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_ + self.intercept_

def svr_kkt_residual(svr, X: np.ndarray, y: np.ndarray) -> float:
    """
    Largest violation of the epsilon-SVR optimality conditions on the training set.

    With beta_i = alpha_i - alpha_i* and r_i = y_i - f(x_i):
    beta_i = 0 needs |r_i| <= epsilon, 0 < |beta_i| < C needs r_i = epsilon * sign(beta_i),
    |beta_i| = C needs r_i * sign(beta_i) >= epsilon.
    """
    check_is_fitted(svr, "dual_coef_")
    residual = np.asarray(y, dtype=float) - svr.predict(X)
    beta = np.zeros(len(residual))
    beta[svr.support_] = svr.dual_coef_.ravel()

    bound = np.isclose(np.abs(beta), svr.C, rtol=0.0, atol=1e-12 * max(1.0, svr.C))
    free = (beta != 0) & ~bound
    zero = beta == 0
    sign = np.sign(beta)

    violation = np.zeros(len(residual))
    violation[zero] = np.maximum(0.0, np.abs(residual[zero]) - svr.epsilon)
    violation[free] = np.abs(residual[free] - svr.epsilon * sign[free])
    violation[bound] = np.maximum(0.0, svr.epsilon - residual[bound] * sign[bound])
    return float(violation.max()) if len(violation) else 0.0
