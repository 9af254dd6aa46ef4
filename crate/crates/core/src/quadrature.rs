//! Gauss–Kronrod (7/15) rule.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

/// The 15-point Kronrod rule on `[a, b]` with its embedded 7-point Gauss
/// rule, for integrands evaluated at precomputed nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gk15 {
    /// Nodes on `[-1, 1]`, ascending.
    pub nodes: [f64; 15],
    pub kronrod: [f64; 15],
    /// Zero at the Kronrod-only nodes.
    pub gauss: [f64; 15],
}

impl Default for Gk15 {
    fn default() -> Self {
        let mut nodes = [0.0; 15];
        let mut kronrod = [0.0; 15];
        let mut gauss = [0.0; 15];
        for k in 0..8 {
            let g = if k % 2 == 1 { WG[k / 2] } else { 0.0 };
            for idx in [k, 14 - k] {
                nodes[idx] = if idx == k { -XGK[k] } else { XGK[k] };
                kronrod[idx] = WGK[k];
                gauss[idx] = g;
            }
        }
        Self { nodes, kronrod, gauss }
    }
}

impl Gk15 {
    /// Nodes mapped onto `[a, b]`.
    pub fn points(&self, a: f64, b: f64) -> [f64; 15] {
        let (center, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.map(|x| center + half * x)
    }

    /// Kronrod estimate and |Kronrod − Gauss| for `values` sampled at
    /// `points(a, b)`.
    pub fn apply(&self, a: f64, b: f64, values: &[f64; 15]) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mut k = 0.0;
        let mut g = 0.0;
        for ((v, wk), wg) in values.iter().zip(&self.kronrod).zip(&self.gauss) {
            k += wk * v;
            g += wg * v;
        }
        (k * half, ((k - g) * half).abs())
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F, a: f64, b: f64) -> (f64, f64) {
        let values = self.points(a, b).map(f);
        self.apply(a, b, &values)
    }
}
