"""Scikit-learn style front end: fit weights to sensor positions, predict
complex pattern responses for directions."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import InfeasibleError
from .geometry import CarrierContext, Direction, SensorArray, steering_matrix
from .metrics import QuadratureSpec, to_db
from .synthesis import SynthesisConfig, synthesize


class SuperdirectiveBeamformer(BaseEstimator):
    """Synthesizes super-directive weights for a sensor layout.

    fit(X) takes sensor positions in meters, one (x, y, z) row per sensor,
    and runs the sidelobe-pinning synthesis at the configured carrier and
    look direction. predict(X) maps (theta, phi) direction rows in radians
    to the beamformer's complex response.

    Parameters
    ----------
    f0_hz : float
        Carrier frequency in Hz.
    look_theta_deg, look_phi_deg : float
        Look direction in degrees (polar angle from z, azimuth from x).
    epsilon_db : float
        External-noise dominance floor in dB.
    sidelobe_db : float
        Desired uniform sidelobe ceiling in dB relative to the mainlobe.
    delta_db : float
        Acceptance tolerance on the achieved REIN versus the floor.
    sidelobe_region : str
        "azimuth-cut" (default) or "sphere".
    grid_step_deg : float
        Pattern sampling step for peak detection.
    n_theta, n_phi : int
        Base quadrature node counts for the average-power matrix.
    max_pin_iterations, max_outer_iterations : int
        Inner pinning and outer floor-relaxation limits.

    Attributes
    ----------
    weights_ : complex ndarray of shape (n_sensors,)
    directivity_db_, gamma_db_ : float
    result_ : SynthesisResult with the full iteration trace.
    """

    def __init__(
        self,
        f0_hz=4e6,
        look_theta_deg=90.0,
        look_phi_deg=0.0,
        epsilon_db=-30.0,
        sidelobe_db=-25.0,
        delta_db=0.5,
        sidelobe_region="azimuth-cut",
        grid_step_deg=1.0,
        n_theta=64,
        n_phi=128,
        max_pin_iterations=50,
        max_outer_iterations=10,
    ):
        self.f0_hz = f0_hz
        self.look_theta_deg = look_theta_deg
        self.look_phi_deg = look_phi_deg
        self.epsilon_db = epsilon_db
        self.sidelobe_db = sidelobe_db
        self.delta_db = delta_db
        self.sidelobe_region = sidelobe_region
        self.grid_step_deg = grid_step_deg
        self.n_theta = n_theta
        self.n_phi = n_phi
        self.max_pin_iterations = max_pin_iterations
        self.max_outer_iterations = max_outer_iterations

    def fit(self, X, y=None):
        """Synthesize weights for the sensor positions in X.

        Raises InfeasibleError when the synthesis does not converge.
        """
        X = check_array(X, dtype=float)
        if X.shape[1] != 3:
            raise ValueError(f"expected (n_sensors, 3) positions, got shape {X.shape}")
        self.array_ = SensorArray(X)
        self.ctx_ = CarrierContext(float(self.f0_hz))
        config = SynthesisConfig(
            look=Direction.from_degrees(self.look_theta_deg, self.look_phi_deg),
            epsilon_db=self.epsilon_db,
            sidelobe_level_db=self.sidelobe_db,
            delta_db=self.delta_db,
            sidelobe_region=self.sidelobe_region,
            grid_step_deg=self.grid_step_deg,
            quadrature=QuadratureSpec(n_theta=self.n_theta, n_phi=self.n_phi),
            max_pin_iterations=self.max_pin_iterations,
            max_outer_iterations=self.max_outer_iterations,
        )
        result = synthesize(self.array_, self.ctx_, config)
        if not result.converged:
            raise InfeasibleError(f"synthesis did not converge: status {result.status}")
        self.result_ = result
        self.weights_ = result.w_opt
        self.directivity_db_ = result.directivity_db
        self.gamma_db_ = result.gamma_db
        self.n_features_in_ = 3
        return self

    def predict(self, X):
        """Complex beamformer response for (theta, phi) rows in radians."""
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(f"expected (n_directions, 2) angles, got shape {X.shape}")
        v = steering_matrix(self.array_, self.ctx_, X[:, 0], X[:, 1])
        return v @ self.weights_.conj()

    def pattern_db(self, X):
        """Response power in dB relative to the unit mainlobe gain."""
        return to_db(np.abs(self.predict(X)) ** 2)
