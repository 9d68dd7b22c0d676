//! Simulation parameters and their validation.
//!
//! Every field is stored in the unit it is configured in (meters, nodes/m²,
//! dBm, dB, Hz). Conversion to linear mW and linear ratios happens through
//! the accessor methods so the physics code never touches decibels.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::units::{db_to_linear, dbm_to_linear};

/// How an uncolored node picks a color from its palette.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorChoice {
    /// Uniformly at random over the current palette.
    #[default]
    Random,
    /// The palette channel with the largest solo throughput delta.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Cell radius in meters; the base station sits at the origin.
    pub cell_radius: f64,
    /// CU density in nodes/m².
    pub lambda_cu: f64,
    /// MG transmitter (cluster parent) density in nodes/m².
    pub lambda_gt: f64,
    /// MG receiver (cluster child) density in nodes/m².
    pub lambda_gr: f64,
    /// Cluster radius around each MG transmitter, meters.
    pub d_r: f64,
    pub bandwidth_hz: f64,
    /// Noise power per channel, dBm.
    pub noise_dbm: f64,
    pub pathloss_exp: f64,
    pub shadow_sigma_db: f64,
    pub p_c_max_dbm: f64,
    pub p_g_max_dbm: f64,
    /// Minimum CU SINR, dB.
    pub gamma_c_th_db: f64,
    /// Minimum worst-receiver MG SINR, dB.
    pub gamma_g_th_db: f64,
    /// Initial interference-graph threshold, linear gain units.
    pub gamma_th_init: f64,
    /// Additive threshold step, linear gain units.
    pub delta: f64,
    /// Power window step, dB.
    pub beta_dbm_step: f64,
    pub max_outer_iters: u32,
    pub max_color_rounds: u32,
    pub max_power_iters: u32,
    pub color_choice: ColorChoice,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            cell_radius: 500.0,
            lambda_cu: 2.0e-5,
            lambda_gt: 2.0e-5,
            lambda_gr: 3.2e-3,
            d_r: 50.0,
            bandwidth_hz: 1.0e6,
            noise_dbm: -114.0,
            pathloss_exp: 3.6,
            shadow_sigma_db: 8.0,
            p_c_max_dbm: 30.0,
            p_g_max_dbm: 25.0,
            gamma_c_th_db: 6.0,
            gamma_g_th_db: 0.0,
            gamma_th_init: 1.0e-13,
            delta: 5.0e-15,
            beta_dbm_step: 1.0,
            max_outer_iters: 40,
            max_color_rounds: 100,
            max_power_iters: 64,
            color_choice: ColorChoice::Random,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            // serde reports "unknown field `x`, expected ..." for stray keys
            match msg
                .strip_prefix("unknown field `")
                .and_then(|rest| rest.split('`').next())
            {
                Some(key) => Error::UnknownKey(key.to_string()),
                None => Error::MalformedValue {
                    key: "<document>".into(),
                    reason: msg,
                },
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies a flat `key=value` override. The value is parsed as JSON,
    /// falling back to a bare string for enum fields.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("override `{assignment}` is not KEY=VALUE")))?;
        let key = key.trim();
        let raw = raw.trim();
        let mut doc = serde_json::to_value(&*self).expect("config serializes");
        let map = doc.as_object_mut().expect("config is an object");
        let slot = map.get_mut(key).ok_or_else(|| Error::UnknownKey(key.to_string()))?;
        let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let same_kind = matches!(
            (&*slot, &value),
            (Value::Number(_), Value::Number(_)) | (Value::String(_), Value::String(_))
        );
        if !same_kind {
            return Err(Error::MalformedValue {
                key: key.to_string(),
                reason: format!("`{raw}` has the wrong type"),
            });
        }
        *slot = value;
        *self = serde_json::from_value(doc).map_err(|e| Error::MalformedValue {
            key: key.to_string(),
            reason: e.to_string(),
        })?;
        Ok(())
    }

    /// Checks every parameter invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("cell_radius", self.cell_radius),
            ("lambda_cu", self.lambda_cu),
            ("lambda_gt", self.lambda_gt),
            ("lambda_gr", self.lambda_gr),
            ("d_r", self.d_r),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_dbm", self.noise_dbm),
            ("pathloss_exp", self.pathloss_exp),
            ("shadow_sigma_db", self.shadow_sigma_db),
            ("p_c_max_dbm", self.p_c_max_dbm),
            ("p_g_max_dbm", self.p_g_max_dbm),
            ("gamma_c_th_db", self.gamma_c_th_db),
            ("gamma_g_th_db", self.gamma_g_th_db),
            ("gamma_th_init", self.gamma_th_init),
            ("delta", self.delta),
            ("beta_dbm_step", self.beta_dbm_step),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        if self.cell_radius <= 0.0 {
            return Err(invalid("cell_radius", "must be > 0"));
        }
        for (field, v) in [
            ("lambda_cu", self.lambda_cu),
            ("lambda_gt", self.lambda_gt),
            ("lambda_gr", self.lambda_gr),
        ] {
            if v < 0.0 {
                return Err(invalid(field, "must be >= 0"));
            }
        }
        if self.d_r <= 0.0 {
            return Err(invalid("d_r", "must be > 0"));
        }
        if self.bandwidth_hz <= 0.0 {
            return Err(invalid("bandwidth_hz", "must be > 0"));
        }
        if self.pathloss_exp <= 2.0 {
            return Err(invalid("pathloss_exp", "must be > 2"));
        }
        if self.shadow_sigma_db < 0.0 {
            return Err(invalid("shadow_sigma_db", "must be >= 0"));
        }
        if self.gamma_th_init < 0.0 {
            return Err(invalid("gamma_th_init", "must be >= 0"));
        }
        if self.delta <= 0.0 {
            return Err(invalid("delta", "must be > 0"));
        }
        if self.beta_dbm_step <= 0.0 {
            return Err(invalid("beta_dbm_step", "must be > 0"));
        }
        for (field, v) in [
            ("max_outer_iters", self.max_outer_iters),
            ("max_color_rounds", self.max_color_rounds),
            ("max_power_iters", self.max_power_iters),
        ] {
            if v < 1 {
                return Err(invalid(field, "must be >= 1"));
            }
        }
        Ok(())
    }

    pub fn cell_area(&self) -> f64 {
        std::f64::consts::PI * self.cell_radius * self.cell_radius
    }

    pub fn cluster_area(&self) -> f64 {
        std::f64::consts::PI * self.d_r * self.d_r
    }

    pub fn noise_mw(&self) -> f64 {
        dbm_to_linear(self.noise_dbm)
    }

    pub fn p_c_max_mw(&self) -> f64 {
        dbm_to_linear(self.p_c_max_dbm)
    }

    pub fn p_g_max_mw(&self) -> f64 {
        dbm_to_linear(self.p_g_max_dbm)
    }

    pub fn gamma_c_th(&self) -> f64 {
        db_to_linear(self.gamma_c_th_db)
    }

    pub fn gamma_g_th(&self) -> f64 {
        db_to_linear(self.gamma_g_th_db)
    }
}
