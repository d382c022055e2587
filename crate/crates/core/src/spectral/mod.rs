//! Frequency-space spectral toolbox: ball compressions of the transfer
//! operator and its twists, Neumann solutions of the Poisson equation,
//! radius scans over twist grids, and the free-group return-rate DP.

pub mod ball;
pub mod dual;
pub mod kesten;
pub mod op;
pub mod poisson;
pub mod scan;
pub mod twisted;

pub use ball::FrequencyBall;
pub use dual::{build_dual_operator, build_p_restricted, dual_orbit, DualOrbit, OrbitStatus};
pub use kesten::{kesten_radius_formula, kesten_return_estimate, KestenReport};
pub use op::{
    dominant_eigen, spectral_radius, Applies, Csr, DominantEigen, EstimatePoint, OpKind,
    SpectralReport, TruncatedOperator,
};
pub use poisson::{
    perturbation_check, sawtooth_h_hat, sigma_form, solve_poisson, ModifiedDisplacement,
    PerturbRow, PerturbationTable, PoissonSolution, SigmaReport,
};
pub use scan::{
    axis_and_diagonal_grid, axis_grid, scan_lattice_proxy, scan_r_mu_torus, ScanReport, ScanRow,
    SCAN_BALL_RADIUS, SCAN_ITERATES, SCAN_TOL,
};
pub use twisted::{build_p_lambda, build_p_lambda_with_kernels, sawtooth_kernels, sawtooth_phase_coeff};
