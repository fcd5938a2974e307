//! Energy, cost and scalability calculators.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown transceiver option {0:?} (expected TX1, TX2, TX3, RX1 or RX2)")]
    UnknownOption(String),
    #[error("{0} is a receiver, expected a transmitter")]
    NotTransmitter(String),
    #[error("{0} is a transmitter, expected a receiver")]
    NotReceiver(String),
    #[error("unknown table {0:?} (expected energy, cost or scale)")]
    UnknownTable(String),
    #[error("x must be at least 1")]
    ZeroScale,
    #[error("unknown output format {0:?} (expected text, csv or json)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Component {
    Soa,
    Comb,
    LaserDiode,
    Awg,
    Modulator,
    DsDbr,
    RxSoa,
    RxAwg,
    CoherentRx,
    Photodiode,
}

impl Component {
    /// Power per unit in mW; passive parts draw nothing.
    pub fn unit_power_mw(self) -> u32 {
        match self {
            Component::Soa | Component::RxSoa => 260,
            Component::Comb => 1000,
            Component::LaserDiode => 80,
            Component::Awg | Component::RxAwg => 0,
            Component::Modulator => 1460,
            Component::DsDbr => 1000,
            Component::CoherentRx => 2000,
            Component::Photodiode => 630,
        }
    }
}

/// A transmitter or receiver design as a bill of components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransceiverOption {
    pub name: String,
    pub transmitter: bool,
    pub components: Vec<(Component, u32)>,
}

impl TransceiverOption {
    pub const NAMES: [&'static str; 5] = ["TX1", "TX2", "TX3", "RX1", "RX2"];

    pub fn custom(name: &str, transmitter: bool, components: Vec<(Component, u32)>) -> Self {
        TransceiverOption { name: name.to_string(), transmitter, components }
    }

    pub fn power_mw(&self) -> u32 {
        self.components.iter().map(|&(c, n)| c.unit_power_mw() * n).sum()
    }
}

impl FromStr for TransceiverOption {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        use Component::*;
        let (tx, parts) = match s.to_ascii_uppercase().as_str() {
            "TX1" => (true, vec![(Soa, 2), (Comb, 0), (LaserDiode, 0), (Awg, 1), (Modulator, 1), (DsDbr, 2)]),
            "TX2" => (true, vec![(Soa, 64), (Comb, 0), (LaserDiode, 64), (Awg, 1), (Modulator, 1)]),
            "TX3" => (true, vec![(Soa, 64), (Comb, 1), (LaserDiode, 0), (Awg, 2), (Modulator, 1)]),
            "RX1" => (false, vec![(RxSoa, 64), (RxAwg, 2), (CoherentRx, 0), (Photodiode, 1)]),
            "RX2" => (false, vec![(DsDbr, 2), (RxSoa, 2), (CoherentRx, 1), (Photodiode, 0)]),
            _ => return Err(ModelError::UnknownOption(s.to_string())),
        };
        Ok(TransceiverOption::custom(&s.to_ascii_uppercase(), tx, parts))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub tx: String,
    pub rx: String,
    pub watts: f64,
    pub pj_per_bit: f64,
}

/// Power of one TX/RX pair and the energy per bit at `line_rate_gbps`.
pub fn transceiver_power(
    tx: &TransceiverOption,
    rx: &TransceiverOption,
    line_rate_gbps: f64,
) -> Result<PowerRow, ModelError> {
    if !tx.transmitter {
        return Err(ModelError::NotTransmitter(tx.name.clone()));
    }
    if rx.transmitter {
        return Err(ModelError::NotReceiver(rx.name.clone()));
    }
    let watts = f64::from(tx.power_mw() + rx.power_mw()) / 1000.0;
    Ok(PowerRow { tx: tx.name.clone(), rx: rx.name.clone(), watts, pj_per_bit: watts / line_rate_gbps * 1000.0 })
}

/// Every TX × RX combination of the named options.
pub fn energy_table(line_rate_gbps: f64) -> Vec<PowerRow> {
    let parse = |n: &str| n.parse::<TransceiverOption>().expect("built-in option");
    let mut rows = Vec::new();
    for tx in ["TX1", "TX2", "TX3"] {
        for rx in ["RX1", "RX2"] {
            rows.push(transceiver_power(&parse(tx), &parse(rx), line_rate_gbps).expect("tx/rx roles are right"));
        }
    }
    rows
}

/// Electronic 100G port, W.
pub const ELECTRONIC_PORT_W: (f64, f64) = (2.5, 7.0);
/// Switch ASIC: 225 W per 6.4 Tb/s, charged per 100 Gb/s path.
pub const SWITCH_W_PER_100G: f64 = 225.0 / 6400.0 * 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Topology {
    Flat,
    SpineLeaf,
    FatTree,
    /// Optical star-coupler network: one coherent transceiver and a coupler port per path.
    OpticalStar,
}

impl Topology {
    pub const ALL: [Topology; 4] = [Topology::Flat, Topology::SpineLeaf, Topology::FatTree, Topology::OpticalStar];

    pub fn label(self) -> &'static str {
        match self {
            Topology::Flat => "Flat",
            Topology::SpineLeaf => "SL",
            Topology::FatTree => "FT",
            Topology::OpticalStar => "OCS",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub component: &'static str,
    /// $/Gbps, low and high.
    pub usd_per_gbps: (f64, f64),
    pub per_path: u32,
    /// Whether the row enters the path total. The short-reach transceiver
    /// rows are listed but left out of the totals.
    pub counted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyModel {
    pub topology: Topology,
    pub switches_per_path: u32,
    pub transceivers_per_path: u32,
    pub cost_rows: Vec<CostRow>,
}

fn row(component: &'static str, lo: f64, hi: f64, per_path: u32) -> CostRow {
    CostRow { component, usd_per_gbps: (lo, hi), per_path, counted: true }
}

fn uncounted(component: &'static str, lo: f64, hi: f64, per_path: u32) -> CostRow {
    CostRow { counted: false, ..row(component, lo, hi, per_path) }
}

impl TopologyModel {
    pub fn new(topology: Topology) -> Self {
        let (switches_per_path, transceivers_per_path, cost_rows) = match topology {
            Topology::Flat => {
                (1, 2, vec![row("100GE transceiver (20m)", 1.0, 3.0, 2), row("6.4T switch (tier 1)", 6.0, 10.0, 1)])
            }
            Topology::SpineLeaf => (
                3,
                4,
                vec![
                    uncounted("100GE transceiver (3m)", 0.1, 0.1, 2),
                    row("100GE transceiver (20m)", 1.0, 3.0, 2),
                    row("6.4T switch (tier 1)", 6.0, 10.0, 2),
                    row("12.8T switch (tier 2)", 10.0, 10.0, 1),
                ],
            ),
            Topology::FatTree => (
                5,
                6,
                vec![
                    uncounted("100GE transceiver (3m)", 0.1, 0.1, 2),
                    row("100GE transceiver (20m)", 1.0, 3.0, 4),
                    row("6.4T switch (tier 1)", 6.0, 10.0, 2),
                    row("12.8T switch (tier 2)", 10.0, 10.0, 2),
                    row("25.6T switch (tier 3)", 12.0, 12.0, 1),
                ],
            ),
            // co-rx low/high bracket the range, medium is 6 $/Gbps
            Topology::OpticalStar => {
                (0, 1, vec![row("100GE coherent-rx transceiver", 4.5, 7.5, 1), row("star coupler", 0.04, 0.04, 1)])
            }
        };
        TopologyModel { topology, switches_per_path, transceivers_per_path, cost_rows }
    }

    /// Sum of counted rows, interval arithmetic on (low, high).
    pub fn cost_per_gbps(&self) -> (f64, f64) {
        self.cost_rows.iter().filter(|r| r.counted).fold((0.0, 0.0), |(lo, hi), r| {
            let n = f64::from(r.per_path);
            (lo + n * r.usd_per_gbps.0, hi + n * r.usd_per_gbps.1)
        })
    }

    /// Electronic power per 100G path, W (low, high). `None` for the
    /// optical network, whose power comes from [`transceiver_power`].
    pub fn electronic_power_w(&self) -> Option<(f64, f64)> {
        if self.topology == Topology::OpticalStar {
            return None;
        }
        let t = f64::from(self.transceivers_per_path);
        let s = f64::from(self.switches_per_path) * SWITCH_W_PER_100G;
        Some((t * ELECTRONIC_PORT_W.0 + s, t * ELECTRONIC_PORT_W.1 + s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostSummary {
    pub topology: Topology,
    pub usd_per_gbps_low: f64,
    pub usd_per_gbps_high: f64,
    pub power_w_low: Option<f64>,
    pub power_w_high: Option<f64>,
}

pub fn cost_table() -> Vec<CostSummary> {
    Topology::ALL
        .iter()
        .map(|&t| {
            let m = TopologyModel::new(t);
            let (lo, hi) = m.cost_per_gbps();
            let power = m.electronic_power_w();
            CostSummary {
                topology: t,
                usd_per_gbps_low: round(lo, 2),
                usd_per_gbps_high: round(hi, 2),
                power_w_low: power.map(|p| round(p.0, 2)),
                power_w_high: power.map(|p| round(p.1, 2)),
            }
        })
        .collect()
}

/// Capacity lost to laser retuning in every 20 ns slot.
pub const TUNING_EFFICIENCY: f64 = 0.975;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleRow {
    pub x: u64,
    pub nodes: u64,
    /// Requests per node per epoch (6 per rack).
    pub requests_per_node: u64,
    pub racks: u64,
    pub substars: u64,
    pub cables: u64,
    pub channels: u64,
    pub capacity_tbps: f64,
}

/// Network built from `x` racks of `n_nodes` nodes, each node with `x`
/// transceivers, one star coupler per rack pair (x²) and W = N channels
/// per coupler.
pub fn scalability_row(x: u64, n_nodes: u64, line_rate_gbps: f64) -> Result<ScaleRow, ModelError> {
    if x == 0 {
        return Err(ModelError::ZeroScale);
    }
    let substars = x * x;
    Ok(ScaleRow {
        x,
        nodes: n_nodes * x,
        requests_per_node: 6 * x,
        racks: x,
        substars,
        cables: n_nodes * substars * 4,
        channels: n_nodes * substars,
        capacity_tbps: line_rate_gbps * (n_nodes * substars) as f64 * TUNING_EFFICIENCY / 1000.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(ModelError::UnknownFormat(s.to_string())),
        }
    }
}

fn round(v: f64, places: i32) -> f64 {
    let k = 10f64.powi(places);
    (v * k).round() / k
}

fn render<T: Serialize>(format: Format, header: &[&str], rows: &[T], cells: impl Fn(&T) -> Vec<String>) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(rows).expect("rows serialize") + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header).expect("in-memory write");
            for r in rows {
                w.write_record(cells(r)).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
        Format::Text => {
            let body: Vec<Vec<String>> = rows.iter().map(&cells).collect();
            let widths: Vec<usize> = (0..header.len())
                .map(|i| body.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
                .collect();
            let line = |cols: Vec<&str>| {
                let padded: Vec<String> = cols.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                padded.join("  ").trim_end().to_string() + "\n"
            };
            let mut out = line(header.to_vec());
            for r in &body {
                out += &line(r.iter().map(String::as_str).collect());
            }
            out
        }
    }
}

pub fn render_energy(rows: &[PowerRow], format: Format) -> String {
    render(format, &["tx", "rx", "watts", "pj_per_bit"], rows, |r| {
        vec![r.tx.clone(), r.rx.clone(), format!("{:.2}", r.watts), format!("{:.1}", r.pj_per_bit)]
    })
}

pub fn render_cost(rows: &[CostSummary], format: Format) -> String {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
    render(format, &["topology", "usd_per_gbps_low", "usd_per_gbps_high", "power_w_low", "power_w_high"], rows, |r| {
        vec![
            r.topology.to_string(),
            format!("{:.2}", r.usd_per_gbps_low),
            format!("{:.2}", r.usd_per_gbps_high),
            opt(r.power_w_low),
            opt(r.power_w_high),
        ]
    })
}

pub fn render_scale(rows: &[ScaleRow], format: Format) -> String {
    let header = ["x", "nodes", "requests_per_node", "racks", "substars", "cables", "channels", "capacity_tbps"];
    render(format, &header, rows, |r| {
        vec![
            r.x.to_string(),
            r.nodes.to_string(),
            r.requests_per_node.to_string(),
            r.racks.to_string(),
            r.substars.to_string(),
            r.cables.to_string(),
            r.channels.to_string(),
            format!("{:.0}", r.capacity_tbps),
        ]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opt(name: &str) -> TransceiverOption {
        name.parse().unwrap()
    }

    #[test]
    fn lowest_power_pair() {
        let p = transceiver_power(&opt("TX1"), &opt("RX2"), 100.0).unwrap();
        assert!((p.watts - 8.5).abs() < 1e-12);
        assert!((p.pj_per_bit - 85.0).abs() < 1e-9);
        let lowest = energy_table(100.0).into_iter().min_by(|a, b| a.watts.total_cmp(&b.watts)).unwrap();
        assert_eq!((lowest.tx.as_str(), lowest.rx.as_str()), ("TX1", "RX2"));
    }

    #[test]
    fn tx2_rx1_sums_rows() {
        let p = transceiver_power(&opt("TX2"), &opt("RX1"), 100.0).unwrap();
        assert!((p.watts - 40.49).abs() < 1e-9);
    }

    #[test]
    fn empty_options_draw_nothing() {
        let tx = TransceiverOption::custom("none", true, vec![(Component::Soa, 0)]);
        let rx = TransceiverOption::custom("none", false, vec![]);
        assert_eq!(transceiver_power(&tx, &rx, 100.0).unwrap().watts, 0.0);
    }

    #[test]
    fn option_errors() {
        assert_eq!("TX9".parse::<TransceiverOption>(), Err(ModelError::UnknownOption("TX9".into())));
        assert!(matches!(transceiver_power(&opt("RX1"), &opt("RX2"), 100.0), Err(ModelError::NotTransmitter(_))));
        assert!(matches!(transceiver_power(&opt("TX1"), &opt("TX2"), 100.0), Err(ModelError::NotReceiver(_))));
    }

    #[test]
    fn path_shapes() {
        let shape = |t| {
            let m = TopologyModel::new(t);
            (m.switches_per_path, m.transceivers_per_path)
        };
        assert_eq!(shape(Topology::Flat), (1, 2));
        assert_eq!(shape(Topology::SpineLeaf), (3, 4));
        assert_eq!(shape(Topology::FatTree), (5, 6));
    }

    #[test]
    fn flat_electronic_power_tops_out_near_17_5() {
        let (lo, hi) = TopologyModel::new(Topology::Flat).electronic_power_w().unwrap();
        assert!((hi - 17.5).abs() < 0.05, "{hi}");
        assert!(lo < hi);
        assert!(TopologyModel::new(Topology::OpticalStar).electronic_power_w().is_none());
    }

    #[test]
    fn scale_rows() {
        let r = scalability_row(1, 64, 100.0).unwrap();
        assert_eq!((r.substars, r.channels), (1, 64));
        let r = scalability_row(4, 64, 100.0).unwrap();
        assert_eq!((r.nodes, r.cables), (256, 4096));
        assert_eq!(scalability_row(0, 64, 100.0), Err(ModelError::ZeroScale));
    }

    #[test]
    fn scale_is_monotone() {
        let rows: Vec<_> = (1..=64).map(|x| scalability_row(x, 64, 100.0).unwrap()).collect();
        for w in rows.windows(2) {
            assert!(w[1].capacity_tbps > w[0].capacity_tbps);
            assert!(w[1].channels > w[0].channels);
        }
    }

    #[test]
    fn renderings() {
        let rows = energy_table(100.0);
        let text = render_energy(&rows, Format::Text);
        assert_eq!(text.lines().count(), 7);
        assert!(text.lines().any(|l| l.contains("TX1") && l.contains("RX2") && l.contains("85.0")));
        let csv = render_cost(&cost_table(), Format::Csv);
        assert!(csv.starts_with("topology,usd_per_gbps_low,"));
        assert!(csv.contains("OCS,4.54,7.54,-,-"));
        let json = render_scale(&[scalability_row(4, 64, 100.0).unwrap()], Format::Json);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v[0]["cables"], 4096);
        assert_eq!("yaml".parse::<Format>(), Err(ModelError::UnknownFormat("yaml".into())));
    }
}
