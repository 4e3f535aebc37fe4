use nalgebra::{Complex, Matrix3};

pub type C64 = Complex<f64>;
pub type CMat3 = Matrix3<C64>;

/// Spin-1 operators in the Zeeman basis `{|+1⟩, |0⟩, |−1⟩}` (ħ = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMatrices {
    pub sx: CMat3,
    pub sy: CMat3,
    pub sz: CMat3,
}

pub fn spin1_operators() -> SpinMatrices {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let re = |x: f64| C64::new(x, 0.0);
    let im = |x: f64| C64::new(0.0, x);
    SpinMatrices {
        sx: CMat3::new(z, re(r), z, re(r), z, re(r), z, re(r), z),
        sy: CMat3::new(z, im(-r), z, im(r), z, im(-r), z, im(r), z),
        sz: CMat3::new(re(1.0), z, z, z, z, z, z, z, re(-1.0)),
    }
}

impl SpinMatrices {
    /// `S_x² − S_y²`
    pub fn rhombic(&self) -> CMat3 {
        self.sx * self.sx - self.sy * self.sy
    }

    pub fn total_squared(&self) -> CMat3 {
        self.sx * self.sx + self.sy * self.sy + self.sz * self.sz
    }
}

pub fn anticommutator(a: &CMat3, b: &CMat3) -> CMat3 {
    a * b + b * a
}

pub fn commutator(a: &CMat3, b: &CMat3) -> CMat3 {
    a * b - b * a
}

/// Largest elementwise modulus of `m`.
pub fn max_abs(m: &CMat3) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
