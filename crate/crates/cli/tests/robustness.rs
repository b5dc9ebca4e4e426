//! Model-mismatch suite on a short writing mission.

use aerowrite::sim::Mismatch;
use aerowrite_cli::config::{MismatchSection, MissionSection, ProfileSection};
use aerowrite_cli::{simulate, MissionConfig};

fn short_mission(mismatch: Mismatch) -> MissionConfig {
    let mut cfg = MissionConfig {
        mission: MissionSection {
            text: Some("L".into()),
            height: 0.1,
            home_distance: 0.06,
            dwell: 0.5,
            ..MissionSection::default()
        },
        profile: ProfileSection { v_max: 0.1, a_max: 0.1 },
        ..MissionConfig::default()
    };
    cfg.plant.seed = 11;
    cfg.plant.mismatch = MismatchSection {
        mass: mismatch.mass,
        inertia: mismatch.inertia,
        spring: mismatch.spring,
        moment_coeff: mismatch.moment_coeff,
    };
    cfg
}

/// RMS tip position error over pen-down ticks (m).
fn ee_rms(mismatch: Mismatch) -> f64 {
    let o = simulate(&short_mission(mismatch)).map_err(|(e, _)| e).unwrap();
    let sq: Vec<f64> = o
        .records()
        .iter()
        .filter(|r| r.pen_down)
        .map(|r| (r.ee_position() - r.ref_ee_position()).norm_squared())
        .collect();
    (sq.iter().sum::<f64>() / sq.len() as f64).sqrt()
}

#[test]
fn nominal_plant_tracks_best() {
    let nominal = ee_rms(Mismatch::default());
    let mut beaten = Vec::new();
    for (name, m) in Mismatch::presets() {
        let rms = ee_rms(m);
        println!("{name:>12}: {:.4} mm (nominal {:.4} mm)", 1e3 * rms, 1e3 * nominal);
        if rms < nominal {
            beaten.push(format!("{name} {:.4} mm", 1e3 * rms));
        }
    }
    assert!(beaten.is_empty(), "nominal {:.4} mm beaten by {}", 1e3 * nominal, beaten.join(", "));
}

#[test]
fn every_preset_completes_in_contact() {
    for (name, m) in Mismatch::presets() {
        let o = simulate(&short_mission(m)).map_err(|(e, _)| e).unwrap();
        assert_eq!(o.contact_segments(), 1, "{name}");
        assert!(o.contact_ratio() >= 0.95, "{name}: {}", o.contact_ratio());
    }
}
