use serde::{Deserialize, Serialize};

use crate::numerics::MonotoneCubic;

/// Value and multiplier tables for one endowment state.
///
/// Nodes start at the reset level ω⁰(s): below it the value is flat and
/// the multiplier on promise keeping is zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "TableData", into = "TableData")]
pub struct StateTable {
    pub(crate) data: TableData,
    value: MonotoneCubic,
    log_nu: MonotoneCubic,
}

/// Serializable contents of a [`StateTable`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableData {
    pub nodes: Vec<f64>,
    pub value: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub consumption: Vec<f64>,
    /// promises[k][r] at node k.
    pub promises: Vec<Vec<f64>>,
    pub beta: f64,
    pub delta: f64,
}

impl From<TableData> for StateTable {
    fn from(data: TableData) -> Self {
        let slopes: Vec<f64> = data
            .lambda
            .iter()
            .map(|l| -data.beta / data.delta * l)
            .collect();
        let value = MonotoneCubic::with_slopes(data.nodes.clone(), data.value.clone(), slopes);
        let lnu: Vec<f64> = data.lambda.iter().map(|l| l.ln_1p()).collect();
        let log_nu = MonotoneCubic::new(data.nodes.clone(), lnu);
        Self {
            data,
            value,
            log_nu,
        }
    }
}

impl From<StateTable> for TableData {
    fn from(t: StateTable) -> Self {
        t.data
    }
}

impl StateTable {
    /// Copy with values below the top node shifted by a constant.
    pub fn shifted(self, c: f64) -> Self {
        let mut data = self.data;
        let top = data.value.len() - 1;
        for v in &mut data.value[..top] {
            *v += c;
        }
        Self::from(data)
    }

    pub fn data(&self) -> &TableData {
        &self.data
    }

    pub fn nodes(&self) -> &[f64] {
        &self.data.nodes
    }

    /// Lower end of the table, the reset level ω⁰.
    pub fn omega0(&self) -> f64 {
        self.data.nodes[0]
    }

    pub fn omega_top(&self) -> f64 {
        *self.data.nodes.last().unwrap()
    }

    /// Interpolated value; flat below ω⁰.
    pub fn value(&self, omega: f64) -> f64 {
        if omega <= self.omega0() {
            self.data.value[0]
        } else {
            self.value.eval(omega)
        }
    }

    /// −(δ/β)V_ω at ω.
    pub fn h(&self, omega: f64) -> f64 {
        if omega < self.omega0() {
            0.0
        } else {
            self.log_nu.eval(omega).exp_m1()
        }
    }

    /// Largest promise whose multiplier does not exceed μ, clamped to the table.
    pub fn h_inv(&self, mu: f64) -> f64 {
        if mu <= self.data.lambda[0] {
            return self.omega0();
        }
        self.log_nu.sup_below(mu.ln_1p())
    }
}
