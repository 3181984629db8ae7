//! LG4 drive program: four off-resonant RF segments per block, each a full
//! turn about a magic-angle-tilted axis.

use alloc::format;

use crate::constants::TAU;
use crate::vector::Vec3;
use crate::{Error, Result};

/// Default RF phase, 55°, which minimizes LG4 line widths.
pub const DEFAULT_ALPHA_DEG: f64 = 55.0;

/// Rotation axes of the LG4 block, listed in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    A,
    ABar,
    BBar,
    B,
}

impl Axis {
    /// Application order within one block.
    pub const ORDER: [Axis; 4] = [Axis::A, Axis::ABar, Axis::BBar, Axis::B];

    pub fn label(self) -> &'static str {
        match self {
            Axis::A => "A",
            Axis::ABar => "Abar",
            Axis::BBar => "Bbar",
            Axis::B => "B",
        }
    }

    /// `+1` for A and B, `−1` for the barred axes.
    pub fn sign(self) -> f64 {
        match self {
            Axis::A | Axis::B => 1.0,
            Axis::ABar | Axis::BBar => -1.0,
        }
    }

    /// RF phase that realizes this axis given the block phase `alpha`.
    ///
    /// The in-plane drive direction is `(sin φ, cos φ)`, so A uses `α`, B
    /// mirrors x with `−α`, and the barred axes add `π`.
    pub fn drive_phase(self, alpha: f64) -> f64 {
        match self {
            Axis::A => alpha,
            Axis::ABar => alpha + core::f64::consts::PI,
            Axis::BBar => core::f64::consts::PI - alpha,
            Axis::B => -alpha,
        }
    }

    /// Unit rotation axis for drive amplitude `rabi`, A-axis detuning
    /// `detuning`, and block phase `alpha`:
    /// `A = (Ω sinα, Ω cosα, Δ)/Ω̄`, `B = (−Ω sinα, Ω cosα, Δ)/Ω̄`,
    /// `Ā = −A`, `B̄ = −B`.
    pub fn direction(self, rabi: f64, detuning: f64, alpha: f64) -> Result<Vec3> {
        let omega_bar = libm::hypot(rabi, detuning);
        if !(omega_bar > 0.0) {
            return Err(Error::DegenerateAxis);
        }
        let (s, c) = (libm::sin(alpha), libm::cos(alpha));
        let base = match self {
            Axis::A | Axis::ABar => Vec3::new(rabi * s, rabi * c, detuning),
            Axis::B | Axis::BBar => Vec3::new(-rabi * s, rabi * c, detuning),
        };
        Ok(base * (self.sign() / omega_bar))
    }
}

/// Detuning satisfying the Lee-Goldburg condition, `Δ = ±Ω/√2`.
pub fn lg_condition(rabi: f64, sign: f64) -> Result<f64> {
    if !(rabi > 0.0) || !rabi.is_finite() {
        return Err(Error::Parameter(format!("Rabi frequency must be positive, got {rabi}")));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::Parameter(format!("detuning sign must be ±1, got {sign}")));
    }
    Ok(sign * rabi / libm::sqrt(2.0))
}

/// One off-resonant RF segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfDrive {
    /// Ω, rad/s.
    pub rabi: f64,
    /// Signed detuning of this segment, rad/s.
    pub detuning: f64,
    /// In-plane drive phase φ: the drive term is `Ω (sinφ I_x + cosφ I_y)`.
    pub phase: f64,
    /// Seconds.
    pub duration: f64,
    pub axis: Axis,
}

impl RfDrive {
    /// Ω̄ = √(Ω² + Δ²).
    pub fn effective_rabi(&self) -> f64 {
        libm::hypot(self.rabi, self.detuning)
    }

    /// Unit rotation axis of this segment.
    pub fn direction(&self) -> Vec3 {
        let (s, c) = (libm::sin(self.phase), libm::cos(self.phase));
        Vec3::new(self.rabi * s, self.rabi * c, self.detuning) * (1.0 / self.effective_rabi())
    }

    pub fn check(&self) -> Result<()> {
        let lg = self.rabi / libm::sqrt(2.0);
        if ((self.detuning.abs() - lg) / lg).abs() > 1e-9 {
            return Err(Error::Parameter(format!(
                "segment {} violates the LG condition: |Δ| = {}, Ω/√2 = {lg}",
                self.axis.label(),
                self.detuning.abs()
            )));
        }
        let t = TAU / self.effective_rabi();
        if ((self.duration - t) / t).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "segment {} lasts {} s, a full turn takes {t} s",
                self.axis.label(),
                self.duration
            )));
        }
        Ok(())
    }
}

/// Ideal, instantaneous trigger rotation that places the thermal
/// magnetization along `target` before the first block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerPulse {
    pub target: Vec3,
}

/// Four-segment LG4 block repeated `n_blocks` times.
#[derive(Debug, Clone, PartialEq)]
pub struct Lg4Schedule {
    segments: [RfDrive; 4],
    n_blocks: usize,
    alpha: f64,
    trigger: Option<TriggerPulse>,
}

impl Lg4Schedule {
    pub fn segments(&self) -> &[RfDrive; 4] {
        &self.segments
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rabi(&self) -> f64 {
        self.segments[0].rabi
    }

    /// |Δ| shared by all segments.
    pub fn detuning(&self) -> f64 {
        self.segments[0].detuning.abs()
    }

    pub fn effective_rabi(&self) -> f64 {
        self.segments[0].effective_rabi()
    }

    /// Length of one segment, `T = 2π/Ω̄`.
    pub fn segment_duration(&self) -> f64 {
        self.segments[0].duration
    }

    pub fn block_duration(&self) -> f64 {
        4.0 * self.segment_duration()
    }

    pub fn total_duration(&self) -> f64 {
        self.block_duration() * self.n_blocks as f64
    }

    pub fn trigger(&self) -> Option<&TriggerPulse> {
        self.trigger.as_ref()
    }

    pub fn with_blocks(mut self, n_blocks: usize) -> Self {
        self.n_blocks = n_blocks.max(1);
        self
    }

    /// Unit vector perpendicular to A and B, `(0, −1, √2 cosα)/√(1+2cos²α)`.
    /// Magnetization started here gives a zero trace phase offset.
    /// Undefined when `sin α = 0`, where A and B coincide.
    pub fn perpendicular_axis(&self) -> Result<Vec3> {
        let a = self.segments[0].direction();
        let b = self.segments[3].direction();
        a.cross(&b).normalized().filter(|_| libm::fabs(libm::sin(self.alpha)) > 1e-9).ok_or_else(|| {
            Error::Parameter(format!("A and B coincide for RF phase {}; sin α must be nonzero", self.alpha))
        })
    }
}

/// Builds the LG4 program `A, Ā, B̄, B`, each segment lasting `2π/Ω̄`.
///
/// The trigger pulse is set to the axis perpendicular to A and B, so the
/// RF phase must satisfy `sin α ≠ 0`.
pub fn build_lg4_schedule(rabi: f64, alpha: f64, n_blocks: usize) -> Result<Lg4Schedule> {
    let detuning = lg_condition(rabi, 1.0)?;
    if n_blocks == 0 {
        return Err(Error::Parameter("n_blocks must be at least 1".into()));
    }
    if !alpha.is_finite() {
        return Err(Error::Parameter(format!("RF phase must be finite, got {alpha}")));
    }
    let duration = TAU / libm::hypot(rabi, detuning);
    let segments = Axis::ORDER.map(|axis| RfDrive {
        rabi,
        detuning: axis.sign() * detuning,
        phase: axis.drive_phase(alpha),
        duration,
        axis,
    });
    let mut schedule = Lg4Schedule { segments, n_blocks, alpha, trigger: None };
    schedule.trigger = Some(TriggerPulse { target: schedule.perpendicular_axis()? });
    Ok(schedule)
}
