//! Event-level selection and flattening into the 67-feature layout.
//!
//! Layout: seven jet blocks `[p_T, η, φ, E, btag, px, py, pz]` ordered by
//! descending p_T (zero-padded), one lepton block `[p_T, η, φ, E, px, py, pz]`
//! and the MET block `[φ, p_T, px, py]`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::kinematics::FourMomentum;
use crate::error::{Error, Result};
use crate::matrix::RAW_FEATURES;

pub const MAX_JETS: usize = 7;
pub const JET_FEATURES: usize = 8;
pub const LEPTON_FEATURES: usize = 7;
pub const MET_FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub p4: FourMomentum,
    pub btag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeptonFlavour {
    Electron,
    Muon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lepton {
    pub p4: FourMomentum,
    pub flavour: LeptonFlavour,
    /// Precomputed isolation decision (isolation w.r.t. jets above threshold).
    pub isolated: bool,
}

/// Missing transverse momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Met {
    pub pt: f64,
    pub phi: f64,
    pub px: f64,
    pub py: f64,
}

impl Met {
    pub fn from_components(px: f64, py: f64) -> Self {
        Self {
            pt: libm::hypot(px, py),
            phi: libm::atan2(py, px),
            px,
            py,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub jets: Vec<Jet>,
    pub leptons: Vec<Lepton>,
    pub met: Met,
    /// 1 = signal, 0 = background.
    pub label: u8,
}

/// Object-level and event-level cuts. All p_T and |η| comparisons are strict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub electron_pt_min: f64,
    pub electron_abs_eta_max: f64,
    pub muon_pt_min: f64,
    pub muon_abs_eta_max: f64,
    pub jet_pt_min: f64,
    pub jet_abs_eta_max: f64,
    pub min_jets: usize,
    pub min_btagged_jets: usize,
    pub required_leptons: usize,
    pub require_isolation: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            electron_pt_min: 30.0,
            electron_abs_eta_max: 2.1,
            muon_pt_min: 26.0,
            muon_abs_eta_max: 2.1,
            jet_pt_min: 30.0,
            jet_abs_eta_max: 2.4,
            min_jets: 4,
            min_btagged_jets: 2,
            required_leptons: 1,
            require_isolation: true,
        }
    }
}

fn passes(p4: &FourMomentum, pt_min: f64, abs_eta_max: f64) -> bool {
    // Objects along the beam axis have no defined η and never pass.
    match p4.eta() {
        Ok(eta) => p4.pt() > pt_min && libm::fabs(eta) < abs_eta_max,
        Err(_) => false,
    }
}

impl SelectionConfig {
    pub fn jet_passes(&self, jet: &Jet) -> bool {
        passes(&jet.p4, self.jet_pt_min, self.jet_abs_eta_max)
    }

    pub fn lepton_passes(&self, lepton: &Lepton) -> bool {
        if self.require_isolation && !lepton.isolated {
            return false;
        }
        match lepton.flavour {
            LeptonFlavour::Electron => passes(&lepton.p4, self.electron_pt_min, self.electron_abs_eta_max),
            LeptonFlavour::Muon => passes(&lepton.p4, self.muon_pt_min, self.muon_abs_eta_max),
        }
    }

    /// Copy of the event keeping only objects that pass their object-level cuts.
    pub fn select_objects(&self, event: &EventRecord) -> EventRecord {
        EventRecord {
            jets: event.jets.iter().filter(|j| self.jet_passes(j)).copied().collect(),
            leptons: event.leptons.iter().filter(|l| self.lepton_passes(l)).copied().collect(),
            met: event.met,
            label: event.label,
        }
    }
}

/// True iff the event passes every object- and event-level cut.
pub fn apply_selection(event: &EventRecord, cuts: &SelectionConfig) -> bool {
    let jets: Vec<&Jet> = event.jets.iter().filter(|j| cuts.jet_passes(j)).collect();
    let btags = jets.iter().filter(|j| j.btag).count();
    let leptons = event.leptons.iter().filter(|l| cuts.lepton_passes(l)).count();
    jets.len() >= cuts.min_jets && btags >= cuts.min_btagged_jets && leptons == cuts.required_leptons
}

fn eta_or_zero(p4: &FourMomentum) -> f64 {
    p4.eta().unwrap_or(0.0)
}

/// Flatten a selected event into the 67-entry feature vector.
pub fn flatten_event(event: &EventRecord) -> Result<Vec<f64>> {
    if event.jets.len() < 4 {
        return Err(Error::Selection(format!("{} jets, at least 4 required", event.jets.len())));
    }
    if event.leptons.len() != 1 {
        return Err(Error::Selection(format!(
            "{} leptons, exactly 1 required",
            event.leptons.len()
        )));
    }
    let mut jets: Vec<&Jet> = event.jets.iter().collect();
    jets.sort_by(|a, b| b.p4.pt().total_cmp(&a.p4.pt()));

    let mut out = Vec::with_capacity(RAW_FEATURES);
    for slot in 0..MAX_JETS {
        match jets.get(slot) {
            Some(j) => {
                let p = &j.p4;
                out.extend_from_slice(&[
                    p.pt(),
                    eta_or_zero(p),
                    p.phi(),
                    p.e,
                    if j.btag { 1.0 } else { 0.0 },
                    p.px,
                    p.py,
                    p.pz,
                ]);
            }
            None => out.extend_from_slice(&[0.0; JET_FEATURES]),
        }
    }
    let l = &event.leptons[0].p4;
    out.extend_from_slice(&[l.pt(), eta_or_zero(l), l.phi(), l.e, l.px, l.py, l.pz]);
    let m = &event.met;
    out.extend_from_slice(&[m.phi, m.pt, m.px, m.py]);
    debug_assert_eq!(out.len(), RAW_FEATURES);
    Ok(out)
}

/// Column names for the 67-feature layout.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(RAW_FEATURES);
    for j in 1..=MAX_JETS {
        for f in ["pt", "eta", "phi", "e", "btag", "px", "py", "pz"] {
            names.push(format!("jet{j}_{f}"));
        }
    }
    for f in ["pt", "eta", "phi", "e", "px", "py", "pz"] {
        names.push(format!("lep_{f}"));
    }
    for f in ["phi", "pt", "px", "py"] {
        names.push(format!("met_{f}"));
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jet(pt: f64, btag: bool) -> Jet {
        Jet { p4: FourMomentum::massless_from_pt_eta_phi(pt, 0.0, 0.3), btag }
    }

    fn muon(pt: f64) -> Lepton {
        Lepton {
            p4: FourMomentum::massless_from_pt_eta_phi(pt, 0.0, -1.0),
            flavour: LeptonFlavour::Muon,
            isolated: true,
        }
    }

    fn event(jets: Vec<Jet>, lepton: Lepton) -> EventRecord {
        EventRecord { jets, leptons: alloc::vec![lepton], met: Met::from_components(10.0, -5.0), label: 1 }
    }

    #[test]
    fn selection_examples() {
        let cuts = SelectionConfig::default();
        let three = event(alloc::vec![jet(31.0, true), jet(31.0, true), jet(31.0, false)], muon(27.0));
        assert!(!apply_selection(&three, &cuts));
        let four = event(
            alloc::vec![jet(31.0, true), jet(31.0, true), jet(31.0, false), jet(31.0, false)],
            muon(27.0),
        );
        assert!(apply_selection(&four, &cuts));
        let mut boundary = four.clone();
        boundary.leptons[0] = muon(26.0);
        assert!(!apply_selection(&boundary, &cuts));
        let mut unisolated = four.clone();
        unisolated.leptons[0].isolated = false;
        assert!(!apply_selection(&unisolated, &cuts));
        let mut one_btag = four;
        one_btag.jets[1].btag = false;
        assert!(!apply_selection(&one_btag, &cuts));
    }

    #[test]
    fn electron_threshold_and_eta_cuts() {
        let cuts = SelectionConfig::default();
        let mut e = muon(29.0);
        e.flavour = LeptonFlavour::Electron;
        assert!(!cuts.lepton_passes(&e));
        e.p4 = FourMomentum::massless_from_pt_eta_phi(31.0, 2.0, 0.0);
        assert!(cuts.lepton_passes(&e));
        e.p4 = FourMomentum::massless_from_pt_eta_phi(31.0, -2.2, 0.0);
        assert!(!cuts.lepton_passes(&e));
        let forward = Jet { p4: FourMomentum::massless_from_pt_eta_phi(40.0, 2.5, 0.0), btag: false };
        assert!(!cuts.jet_passes(&forward));
    }

    #[test]
    fn flatten_pads_and_truncates() {
        let four = event((0..4).map(|i| jet(40.0 + i as f64, i < 2)).collect(), muon(30.0));
        let v = flatten_event(&four).unwrap();
        assert_eq!(v.len(), RAW_FEATURES);
        assert_eq!(v[4 * JET_FEATURES..7 * JET_FEATURES].iter().filter(|&&x| x == 0.0).count(), 24);

        let seven = event(
            (0..7)
                .map(|i| Jet { p4: FourMomentum::massless_from_pt_eta_phi(40.0 + i as f64, 0.5, 0.3), btag: true })
                .collect(),
            muon(30.0),
        );
        let v = flatten_event(&seven).unwrap();
        assert!(v[..7 * JET_FEATURES].iter().all(|&x| x != 0.0));

        let nine = event((0..9).map(|i| jet(35.0 + 10.0 * i as f64, true)).collect(), muon(30.0));
        let v = flatten_event(&nine).unwrap();
        let pts: Vec<f64> = (0..7).map(|s| v[s * 8]).collect();
        assert!((pts[0] - 115.0).abs() < 1e-9);
        assert!((pts[6] - 55.0).abs() < 1e-9);
        assert!(pts.windows(2).all(|w| w[0] >= w[1]));

        let three = event((0..3).map(|_| jet(40.0, true)).collect(), muon(30.0));
        assert!(matches!(flatten_event(&three), Err(Error::Selection(_))));
    }

    #[test]
    fn names_match_layout() {
        let n = feature_names();
        assert_eq!(n.len(), RAW_FEATURES);
        assert_eq!(n[4], "jet1_btag");
        assert_eq!(n[56], "lep_pt");
        assert_eq!(n[66], "met_py");
    }
}
