//! Transverse aperture masks at the slit plane.
//!
//! An aperture is a set of open intervals; the field is multiplied by its
//! indicator function (sharp absorbing edges).

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower < x && x < self.upper
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:e}, {:e})", self.lower, self.upper)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Aperture {
    /// No mask at all; propagation uses the analytic free evolution.
    FullLine,
    /// Sorted, pairwise disjoint open intervals (possibly none).
    Bounded(Vec<Interval>),
}

impl Aperture {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        for (i, iv) in intervals.iter().enumerate() {
            if !(iv.lower.is_finite() && iv.upper.is_finite()) {
                return Err(Error::InvalidAperture(format!("interval {i} {iv} is not finite")));
            }
            if iv.lower >= iv.upper {
                return Err(Error::InvalidAperture(format!(
                    "interval {i} {iv} has non-positive width"
                )));
            }
        }
        for (i, pair) in intervals.windows(2).enumerate() {
            if pair[0].upper > pair[1].lower {
                return Err(Error::InvalidAperture(format!(
                    "intervals {i} {} and {} {} overlap or are out of order",
                    pair[0],
                    i + 1,
                    pair[1]
                )));
            }
        }
        Ok(Aperture::Bounded(intervals))
    }

    pub fn empty() -> Self {
        Aperture::Bounded(Vec::new())
    }

    pub fn is_full_line(&self) -> bool {
        matches!(self, Aperture::FullLine)
    }

    /// Open intervals; empty for the full-line marker.
    pub fn intervals(&self) -> &[Interval] {
        match self {
            Aperture::FullLine => &[],
            Aperture::Bounded(v) => v,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Aperture::Bounded(v) if v.is_empty())
    }

    /// Sorted union of two disjoint bounded apertures.
    pub fn union(&self, other: &Aperture) -> Result<Aperture> {
        match (self, other) {
            (Aperture::Bounded(a), Aperture::Bounded(b)) => {
                let mut all: Vec<Interval> = a.iter().chain(b.iter()).copied().collect();
                all.sort_by(|p, q| p.lower.total_cmp(&q.lower));
                Aperture::new(all)
            }
            _ => Err(Error::InvalidAperture(
                "union with the unbounded full-line marker".into(),
            )),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            Aperture::FullLine => true,
            Aperture::Bounded(v) => {
                let idx = v.partition_point(|iv| iv.upper <= x);
                v.get(idx).is_some_and(|iv| iv.contains(x))
            }
        }
    }
}

/// Sum of interval widths (compensated summation).
pub fn total_open_width(aperture: &Aperture) -> Result<f64> {
    match aperture {
        Aperture::FullLine => Err(Error::InvalidAperture(
            "the full-line marker has unbounded open width".into(),
        )),
        Aperture::Bounded(v) => Ok(neumaier_sum(v.iter().map(Interval::width))),
    }
}

pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Wide slit A plus a grating B of identical narrow slits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitGeometry {
    pub slit_a_width: f64,
    pub slit_a_center: f64,
    pub grating_slit_width: f64,
    /// Opaque gap between consecutive grating slits (edge to edge).
    pub grating_separation: f64,
    pub grating_count: usize,
    pub grating_center: f64,
}

impl Default for SlitGeometry {
    fn default() -> Self {
        Self {
            slit_a_width: 100e-6,
            slit_a_center: 150e-6,
            grating_slit_width: 0.1e-6,
            grating_separation: 0.2e-6,
            grating_count: 1000,
            grating_center: -150e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    AOnly,
    BOnly,
    AAndB,
    FullLine,
    Empty,
}

impl SlitGeometry {
    pub fn slit_a(&self) -> Interval {
        let half = 0.5 * self.slit_a_width;
        Interval::new(self.slit_a_center - half, self.slit_a_center + half)
    }

    pub fn grating_pitch(&self) -> f64 {
        self.grating_slit_width + self.grating_separation
    }

    pub fn grating_span_width(&self) -> f64 {
        let n = self.grating_count as f64;
        n * self.grating_slit_width + (n - 1.0) * self.grating_separation
    }

    pub fn grating_span(&self) -> Interval {
        let half = 0.5 * self.grating_span_width();
        Interval::new(self.grating_center - half, self.grating_center + half)
    }

    pub fn grating_slits(&self) -> Vec<Interval> {
        let start = self.grating_span().lower;
        let pitch = self.grating_pitch();
        (0..self.grating_count)
            .map(|j| {
                let lower = start + j as f64 * pitch;
                Interval::new(lower, lower + self.grating_slit_width)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("slit_a_width", self.slit_a_width),
            ("grating_slit_width", self.grating_slit_width),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidAperture(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.grating_separation.is_finite() && self.grating_separation > 0.0) {
            return Err(Error::InvalidAperture(format!(
                "grating_separation must be positive, got {}",
                self.grating_separation
            )));
        }
        if self.grating_count == 0 {
            return Err(Error::InvalidAperture("grating_count must be at least 1".into()));
        }
        if !(self.slit_a_center.is_finite() && self.grating_center.is_finite()) {
            return Err(Error::InvalidAperture("slit centers must be finite".into()));
        }
        let a = self.slit_a();
        let span = self.grating_span();
        if a.lower < span.upper && span.lower < a.upper {
            return Err(Error::InvalidAperture(format!(
                "slit A {a} overlaps the grating span {span}"
            )));
        }
        Ok(())
    }
}

pub fn build_mask(geometry: &SlitGeometry, selection: Selection) -> Result<Aperture> {
    geometry.validate()?;
    match selection {
        Selection::AOnly => Aperture::new(vec![geometry.slit_a()]),
        Selection::BOnly => Aperture::new(geometry.grating_slits()),
        Selection::AAndB => {
            let a = Aperture::new(vec![geometry.slit_a()])?;
            let b = Aperture::new(geometry.grating_slits())?;
            a.union(&b)
        }
        Selection::FullLine => Ok(Aperture::FullLine),
        Selection::Empty => Ok(Aperture::empty()),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn paper_slit_a() {
        let a = build_mask(&SlitGeometry::default(), Selection::AOnly).unwrap();
        let iv = a.intervals();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].width() - 1e-4).abs() < 1e-18);
        assert!((iv[0].midpoint() - 1.5e-4).abs() < 1e-18);
    }

    #[test]
    fn paper_grating() {
        let g = SlitGeometry::default();
        let b = build_mask(&g, Selection::BOnly).unwrap();
        let iv = b.intervals();
        assert_eq!(iv.len(), 1000);
        for pair in iv.windows(2) {
            assert!((pair[1].lower - pair[0].lower - 3e-7).abs() < 1e-18);
        }
        for s in iv {
            assert!((s.width() - 1e-7).abs() < 1e-19);
        }
        let span = iv.last().unwrap().upper - iv[0].lower;
        assert!((span - 2.998e-4).abs() < 1e-17);
        assert!((g.grating_span_width() - 2.998e-4).abs() < 1e-18);
    }

    #[test]
    fn union_and_special_masks() {
        let g = SlitGeometry::default();
        let ab = build_mask(&g, Selection::AAndB).unwrap();
        let a = build_mask(&g, Selection::AOnly).unwrap();
        let b = build_mask(&g, Selection::BOnly).unwrap();
        assert_eq!(ab.intervals().len(), 1001);
        let mut expected: Vec<_> = b.intervals().to_vec();
        expected.extend_from_slice(a.intervals());
        assert_eq!(ab.intervals(), &expected[..]);

        assert!(build_mask(&g, Selection::Empty).unwrap().is_empty());
        assert!(build_mask(&g, Selection::FullLine).unwrap().is_full_line());
    }

    #[test]
    fn overlapping_geometry_is_rejected() {
        let g = SlitGeometry {
            slit_a_center: -100e-6,
            ..SlitGeometry::default()
        };
        let err = build_mask(&g, Selection::AAndB).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("overlaps"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn open_widths() {
        let g = SlitGeometry::default();
        let a = total_open_width(&build_mask(&g, Selection::AOnly).unwrap()).unwrap();
        let b = total_open_width(&build_mask(&g, Selection::BOnly).unwrap()).unwrap();
        assert!((a - 1e-4).abs() <= 1e-4 * f64::EPSILON);
        assert!((b - 1e-4).abs() <= 1e-4 * 1e-12, "{b:e}");
        assert_eq!(total_open_width(&Aperture::empty()).unwrap(), 0.0);
        let two = Aperture::new(vec![Interval::new(0.0, 1.0), Interval::new(2.0, 3.0)]).unwrap();
        assert_eq!(total_open_width(&two).unwrap(), 2.0);
        assert!(total_open_width(&Aperture::FullLine).is_err());
    }

    #[test]
    fn containment() {
        let ap = Aperture::new(vec![Interval::new(0.0, 1.0), Interval::new(2.0, 3.0)]).unwrap();
        assert!(ap.contains(0.5) && ap.contains(2.5));
        assert!(!ap.contains(1.5) && !ap.contains(1.0) && !ap.contains(-1.0));
    }

    fn is_valid_soup(v: &[(f64, f64)]) -> bool {
        v.iter().all(|&(l, u)| l < u) && v.windows(2).all(|w| w[0].1 <= w[1].0)
    }

    proptest! {
        #[test]
        fn validation_matches_brute_force(
            soup in prop::collection::vec((-10.0f64..10.0, 0.0f64..3.0), 0..8),
            sorted in any::<bool>(),
        ) {
            let mut pairs: Vec<(f64, f64)> = soup.iter().map(|&(l, w)| (l, l + w)).collect();
            if sorted {
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            }
            let intervals = pairs.iter().map(|&(l, u)| Interval::new(l, u)).collect();
            prop_assert_eq!(Aperture::new(intervals).is_ok(), is_valid_soup(&pairs));
        }
    }
}
