//! Frozen outputs of `sigma_oracle.py`.
#![allow(clippy::excessive_precision)]

// (T, ε, δ, m, h, σ)
pub const SIGMA_GRID: [(u64, f64, f64, u32, u32, f64); 20] = [
    (1, 1.0, 0.5, 1, 1, 1.353728726055671070381037),
    (2, 1.0, 0.05, 1, 2, 3.588245155988202960567995),
    (3, 0.5, 0.01, 2, 2, 12.43004584036895802636625),
    (7, 1.0, 0.05, 1, 3, 4.394684852092264021028896),
    (8, 1.0, 0.05, 1, 4, 5.074544964718078640429652),
    (15, 2.0, 0.001, 3, 4, 6.54105442430943857124723),
    (16, 0.1, 1e-6, 1, 5, 118.484826493853143760296),
    (100, 0.3, 0.001, 6, 7, 81.58128201335927167983081),
    (255, 1.0, 0.01, 1, 8, 8.789369704184528042057792),
    (256, 1.0, 0.01, 1, 9, 9.322534380276718519774686),
    (1000, 0.05, 0.001, 6, 10, 585.0496934912663013174424),
    (1023, 4.0, 0.2, 2, 10, 2.140433054167024240387604),
    (4096, 0.3, 0.001, 6, 13, 111.176547163420822199947),
    (18079, 0.3, 0.001, 6, 15, 119.4227686021082564972292),
    (65536, 1.5, 0.0001, 4, 17, 23.87889643427614403902018),
    (1048576, 0.3, 0.001, 6, 21, 141.3029253937432502082424),
    (1048576, 1.0, 0.001, 1, 21, 17.30600331886153793732068),
    (1048577, 0.7, 0.3, 10, 21, 34.9748851398928307583003),
    (4194304, 0.5, 0.001, 70, 23, 303.0610119006021976770228),
    (123456789, 0.01, 1e-9, 1, 27, 3363.192095266152841824279),
];

// γ at T = 2²⁰, k̃ = 512, ε = 0.5, δ = 0.001, β = 0.0005 (d = 33)
pub const GAMMA_2_20_K512: f64 = 6241.988970681599130208159;

// (k̃, γ) at T = 2²², ε = 0.5, δ = 0.001, β = 0.0005 (d = 35)
pub const GAMMA_2_22: [(usize, f64); 4] = [
    (32, 10203.56193118293677704346),
    (64, 9603.352405819234613687962),
    (128, 9003.142880455532450332464),
    (256, 8402.933355091830286976967),
];
