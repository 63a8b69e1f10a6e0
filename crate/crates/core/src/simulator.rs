//! Event-driven forward pass with exact firing times, the causal graph
//! between spikes, direct membrane evaluation, and a fixed-step Euler
//! reference integrator.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::Write;

use log::warn;

use crate::error::{Result, SnnError};
use crate::kernels::{earliest_crossing, NeuronParams, SegmentState};
use crate::network::NetworkTopology;

/// Spike times of each input neuron, in the order of [`NetworkTopology::inputs`].
pub type InputSpikes = [Vec<f64>];

/// Left derivatives below this are reported as degenerate (tangential) fires.
pub const DEGENERATE_SLOPE: f64 = 1e-9;

pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

/// Identifies the `index`-th fire of `neuron`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpikeLabel {
    pub neuron: usize,
    pub index: usize,
}

/// Firing times of every non-input neuron, plus a global time-sorted view.
///
/// Rows of the firing system are the positions in the sorted view, so
/// "fire `k`" below always means the `k`-th fire in global time order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FiringRecord {
    per_neuron: Vec<Vec<f64>>,
    order: Vec<SpikeLabel>,
    times: Vec<f64>,
    rank: Vec<Vec<usize>>,
}

impl FiringRecord {
    pub fn empty(n_neurons: usize) -> Self {
        FiringRecord::from_per_neuron(vec![Vec::new(); n_neurons]).expect("empty record is valid")
    }

    /// Builds a record from per-neuron firing lists, which must be strictly
    /// increasing. Ties across neurons are ordered by neuron index.
    pub fn from_per_neuron(per_neuron: Vec<Vec<f64>>) -> Result<Self> {
        for (n, times) in per_neuron.iter().enumerate() {
            if times.iter().any(|t| !t.is_finite()) {
                return Err(SnnError::invalid(format!("neuron {n} has a non-finite fire")));
            }
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(SnnError::invalid(format!(
                    "fires of neuron {n} are not strictly increasing"
                )));
            }
        }
        let mut order: Vec<SpikeLabel> = per_neuron
            .iter()
            .enumerate()
            .flat_map(|(neuron, ts)| (0..ts.len()).map(move |index| SpikeLabel { neuron, index }))
            .collect();
        order.sort_by(|a, b| {
            per_neuron[a.neuron][a.index]
                .total_cmp(&per_neuron[b.neuron][b.index])
                .then(a.neuron.cmp(&b.neuron))
        });
        let times = order.iter().map(|l| per_neuron[l.neuron][l.index]).collect();
        let mut rank: Vec<Vec<usize>> = per_neuron.iter().map(|ts| vec![0; ts.len()]).collect();
        for (k, l) in order.iter().enumerate() {
            rank[l.neuron][l.index] = k;
        }
        Ok(FiringRecord {
            per_neuron,
            order,
            times,
            rank,
        })
    }

    /// Total number of fires.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn n_neurons(&self) -> usize {
        self.per_neuron.len()
    }

    pub fn times(&self, neuron: usize) -> &[f64] {
        &self.per_neuron[neuron]
    }

    pub fn per_neuron(&self) -> &[Vec<f64>] {
        &self.per_neuron
    }

    /// Labels of all fires in global time order.
    pub fn order(&self) -> &[SpikeLabel] {
        &self.order
    }

    /// Times of all fires in global time order.
    pub fn sorted_times(&self) -> &[f64] {
        &self.times
    }

    /// Global position of a fire.
    pub fn position(&self, label: SpikeLabel) -> usize {
        self.rank[label.neuron][label.index]
    }

    pub fn spike_counts(&self) -> Vec<usize> {
        self.per_neuron.iter().map(Vec::len).collect()
    }

    /// Writes one `neuron_id,time` line per fire in global time order.
    pub fn write_spike_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (l, t) in self.order.iter().zip(&self.times) {
            writeln!(out, "{},{}", l.neuron, t)?;
        }
        Ok(())
    }
}

/// Where a feeding spike came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpikeSource {
    /// The `index`-th spike of input neuron `neuron` (a fixed constant).
    Input { neuron: usize, index: usize },
    /// Fire at this global position in the record.
    Fire(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedEdge {
    pub source: SpikeSource,
    /// Weight index of the synapse the spike arrived through.
    pub weight: usize,
    /// `f - g`, always positive.
    pub lag: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetEdge {
    /// Global position of the earlier fire of the same neuron.
    pub fire: usize,
    pub lag: f64,
}

/// Strictly earlier spikes appearing in the threshold equation of one fire.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CausalNode {
    pub feeds: Vec<FeedEdge>,
    pub resets: Vec<ResetEdge>,
}

/// One [`CausalNode`] per fire, indexed by global position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CausalGraph {
    nodes: Vec<CausalNode>,
}

impl CausalGraph {
    pub fn nodes(&self) -> &[CausalNode] {
        &self.nodes
    }

    pub fn node(&self, fire: usize) -> &CausalNode {
        &self.nodes[fire]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    /// Simulation horizon; fires after it are not computed.
    pub t_max: f64,
    /// Processed-event budget before the run is declared divergent.
    pub max_events: usize,
    /// Drop causal edges whose kernel value at the fire is below this.
    pub tail_cutoff: Option<f64>,
    /// End the run as soon as every output neuron has fired once. Exact for
    /// losses that only see first output spikes.
    pub stop_when_outputs_fired: bool,
}

impl SimOptions {
    pub fn new(t_max: f64) -> Self {
        SimOptions {
            t_max,
            max_events: DEFAULT_MAX_EVENTS,
            tail_cutoff: None,
            stop_when_outputs_fired: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub record: FiringRecord,
    pub graph: CausalGraph,
    /// Number of events processed (input spikes plus fires).
    pub events: usize,
    /// Fires whose left derivative fell below [`DEGENERATE_SLOPE`].
    pub degenerate_fires: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Input,
    Fire,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
    neuron: usize,
    tag: u64,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // same-time events: inputs first, then fires by ascending neuron
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.neuron.cmp(&other.neuron))
            .then(self.tag.cmp(&other.tag))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct NeuronState {
    segment: SegmentState,
    version: u64,
}

pub(crate) fn validate_inputs(net: &NetworkTopology, inputs: &InputSpikes, t_max: f64) -> Result<()> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(SnnError::invalid(format!("t_max must be positive, got {t_max}")));
    }
    if inputs.len() != net.inputs().len() {
        return Err(SnnError::invalid(format!(
            "expected spike lists for {} input neurons, got {}",
            net.inputs().len(),
            inputs.len()
        )));
    }
    for (slot, spikes) in inputs.iter().enumerate() {
        if spikes.iter().any(|&t| !(0.0..=t_max).contains(&t)) {
            return Err(SnnError::invalid(format!(
                "input {slot} has a spike outside [0, {t_max}]"
            )));
        }
        if spikes.windows(2).any(|w| w[1] < w[0]) {
            return Err(SnnError::invalid(format!("input {slot} spikes are not sorted")));
        }
    }
    Ok(())
}

/// Computes every fire in `[0, t_max]` and the causal graph.
///
/// A global queue holds input spikes and each neuron's tentative next fire.
/// Every arriving spike rebases the target's segment, adds the synaptic
/// contribution and re-solves its earliest crossing, which invalidates the
/// previously scheduled fire. After a fire the same segment is searched
/// again, so residual synaptic current can produce further fires.
pub fn simulate(net: &NetworkTopology, inputs: &InputSpikes, opts: &SimOptions) -> Result<Simulation> {
    validate_inputs(net, inputs, opts.t_max)?;
    let params = *net.params();
    let t_max = opts.t_max;

    let mut heap = BinaryHeap::new();
    for (slot, spikes) in inputs.iter().enumerate() {
        let neuron = net.inputs()[slot];
        for (i, &time) in spikes.iter().enumerate() {
            heap.push(Reverse(Event {
                time,
                kind: EventKind::Input,
                neuron,
                tag: i as u64,
            }));
        }
    }

    let mut states = vec![NeuronState::default(); net.n_neurons()];
    let mut fires: Vec<Vec<f64>> = vec![Vec::new(); net.n_neurons()];
    let mut outputs_pending = net.outputs().len();
    let mut events = 0usize;
    let mut degenerate = 0usize;

    let schedule = |heap: &mut BinaryHeap<Reverse<Event>>, state: &mut NeuronState, neuron: usize| -> Result<()> {
        state.version += 1;
        if state.segment.t_ref >= t_max {
            return Ok(());
        }
        if let Some(time) = earliest_crossing(&state.segment, &params, t_max)? {
            heap.push(Reverse(Event {
                time,
                kind: EventKind::Fire,
                neuron,
                tag: state.version,
            }));
        }
        Ok(())
    };

    while let Some(Reverse(event)) = heap.pop() {
        let source = event.neuron;
        if event.kind == EventKind::Fire {
            let state = &mut states[source];
            if state.version != event.tag {
                continue;
            }
            let slope = state.segment.derivative(&params, event.time);
            if slope < DEGENERATE_SLOPE {
                degenerate += 1;
                warn!(
                    "degenerate fire: neuron {source} at t = {} has left derivative {slope:e}",
                    event.time
                );
            }
            let list = &mut fires[source];
            if list.last().is_some_and(|&last| event.time <= last) {
                // a crossing that re-solves onto the previous fire carries no new information
                continue;
            }
            if list.is_empty() && net.outputs().contains(&source) {
                outputs_pending -= 1;
            }
            list.push(event.time);
            state.segment.reset(&params, event.time);
            schedule(&mut heap, state, source)?;
        }

        events += 1;
        if events > opts.max_events {
            return Err(SnnError::Runaway {
                cap: opts.max_events,
                sample: None,
            });
        }

        for &e in net.outgoing(source) {
            let target = net.edges()[e].target;
            let state = &mut states[target];
            state.segment.add_input(&params, event.time, net.weights()[e]);
            schedule(&mut heap, state, target)?;
        }

        if opts.stop_when_outputs_fired && outputs_pending == 0 && !net.outputs().is_empty() {
            break;
        }
    }

    let record = FiringRecord::from_per_neuron(fires)?;
    let graph = build_causal_graph(net, inputs, &record, opts.tail_cutoff);
    Ok(Simulation {
        record,
        graph,
        events,
        degenerate_fires: degenerate,
    })
}

/// Spike times emitted by `neuron`: its input spikes or its recorded fires.
pub fn spikes_of<'a>(
    net: &NetworkTopology,
    inputs: &'a InputSpikes,
    record: &'a FiringRecord,
    neuron: usize,
) -> &'a [f64] {
    match net.input_slot(neuron) {
        Some(slot) => &inputs[slot],
        None => record.times(neuron),
    }
}

/// Builds the causal graph of a firing configuration: each fire of neuron `i`
/// is linked to every strictly earlier spike of every neuron feeding `i`, and
/// to every strictly earlier fire of `i` itself.
///
/// With `tail_cutoff`, feed edges with kernel value below the cutoff and reset
/// edges with `e^{-β lag}` below it are dropped.
pub fn build_causal_graph(
    net: &NetworkTopology,
    inputs: &InputSpikes,
    record: &FiringRecord,
    tail_cutoff: Option<f64>,
) -> CausalGraph {
    let params = net.params();
    let mut nodes = Vec::with_capacity(record.len());
    for (label, &f) in record.order().iter().zip(record.sorted_times()) {
        let mut node = CausalNode::default();
        for &e in net.incoming(label.neuron) {
            let source = net.edges()[e].source;
            let is_input = net.is_input(source);
            for (index, &g) in spikes_of(net, inputs, record, source).iter().enumerate() {
                if g >= f {
                    break;
                }
                let lag = f - g;
                if tail_cutoff.is_some_and(|c| params.feed_kernel(lag) < c) {
                    continue;
                }
                let source = if is_input {
                    SpikeSource::Input { neuron: source, index }
                } else {
                    SpikeSource::Fire(record.position(SpikeLabel { neuron: source, index }))
                };
                node.feeds.push(FeedEdge { source, weight: e, lag });
            }
        }
        for (index, &prev) in record.times(label.neuron)[..label.index].iter().enumerate() {
            let lag = f - prev;
            if tail_cutoff.is_some_and(|c| params.reset_kernel(lag) < c) {
                continue;
            }
            node.resets.push(ResetEdge {
                fire: record.position(SpikeLabel {
                    neuron: label.neuron,
                    index,
                }),
                lag,
            });
        }
        nodes.push(node);
    }
    CausalGraph { nodes }
}

fn potential_with(
    net: &NetworkTopology,
    inputs: &InputSpikes,
    record: &FiringRecord,
    neuron: usize,
    t: f64,
    include_at_t: bool,
) -> f64 {
    if net.is_input(neuron) {
        return 0.0;
    }
    let params = net.params();
    let counts = |s: f64| if include_at_t { s <= t } else { s < t };
    let mut v = 0.0;
    for &e in net.incoming(neuron) {
        let source = net.edges()[e].source;
        let y: f64 = spikes_of(net, inputs, record, source)
            .iter()
            .take_while(|&&g| counts(g))
            .map(|&g| params.feed_kernel(t - g))
            .sum();
        v += net.weights()[e] * y;
    }
    let resets: f64 = record
        .times(neuron)
        .iter()
        .take_while(|&&f| counts(f))
        .map(|&f| params.reset_kernel(t - f))
        .sum();
    v - params.theta * resets
}

/// Membrane potential of `neuron` at `t` from the kernel sum; right-continuous,
/// so a fire at exactly `t` has already subtracted θ.
pub fn membrane_potential(
    net: &NetworkTopology,
    inputs: &InputSpikes,
    record: &FiringRecord,
    neuron: usize,
    t: f64,
) -> f64 {
    potential_with(net, inputs, record, neuron, t, true)
}

/// Left limit of the membrane potential at `t` (only strictly earlier events).
/// At a recorded fire this is the left-hand side of its threshold equation.
pub fn potential_before(
    net: &NetworkTopology,
    inputs: &InputSpikes,
    record: &FiringRecord,
    neuron: usize,
    t: f64,
) -> f64 {
    potential_with(net, inputs, record, neuron, t, false)
}

/// Analytic left time-derivative of the membrane potential at `t`.
pub fn left_derivative(
    net: &NetworkTopology,
    inputs: &InputSpikes,
    record: &FiringRecord,
    neuron: usize,
    t: f64,
) -> f64 {
    let params = net.params();
    let mut d = 0.0;
    for &e in net.incoming(neuron) {
        let source = net.edges()[e].source;
        let y: f64 = spikes_of(net, inputs, record, source)
            .iter()
            .take_while(|&&g| g < t)
            .map(|&g| params.feed_deriv_unchecked(t - g))
            .sum();
        d += net.weights()[e] * y;
    }
    let resets: f64 = record
        .times(neuron)
        .iter()
        .take_while(|&&f| f < t)
        .map(|&f| params.reset_kernel_deriv(t - f))
        .sum();
    d - params.theta * resets
}

/// Potential of every neuron at each query time, `[neuron][query]`.
/// Input neurons have no membrane and report zero.
pub fn membrane_trace(
    net: &NetworkTopology,
    inputs: &InputSpikes,
    record: &FiringRecord,
    query_times: &[f64],
) -> Vec<Vec<f64>> {
    (0..net.n_neurons())
        .map(|n| {
            query_times
                .iter()
                .map(|&t| membrane_potential(net, inputs, record, n, t))
                .collect()
        })
        .collect()
}

/// Writes a wide CSV `time,n<id>,...` with one row per query time.
pub fn write_trace_csv<W: Write>(
    mut out: W,
    neurons: &[usize],
    query_times: &[f64],
    trace: &[Vec<f64>],
) -> std::io::Result<()> {
    write!(out, "time")?;
    for n in neurons {
        write!(out, ",n{n}")?;
    }
    writeln!(out)?;
    for (q, t) in query_times.iter().enumerate() {
        write!(out, "{t}")?;
        for &n in neurons {
            write!(out, ",{}", trace[n][q])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Fixed-step explicit Euler integration of synaptic current and membrane
/// with threshold-and-subtract reset. Fires are reported at step midpoints
/// and delivered to targets at the start of the following step.
pub fn euler_simulate(
    net: &NetworkTopology,
    inputs: &InputSpikes,
    t_max: f64,
    dt: f64,
) -> Result<FiringRecord> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SnnError::invalid(format!("dt must be positive, got {dt}")));
    }
    validate_inputs(net, inputs, t_max)?;
    let NeuronParams { alpha, beta, theta } = *net.params();

    let mut arrivals: Vec<(f64, usize)> = inputs
        .iter()
        .enumerate()
        .flat_map(|(slot, ts)| ts.iter().map(move |&t| (t, slot)))
        .map(|(t, slot)| (t, net.inputs()[slot]))
        .collect();
    arrivals.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = net.n_neurons();
    let dynamic: Vec<usize> = (0..n).filter(|&i| !net.is_input(i)).collect();
    let mut current = vec![0.0; n];
    let mut potential = vec![0.0; n];
    let mut fires: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut fired_last_step: Vec<usize> = Vec::new();
    let mut fired_now: Vec<usize> = Vec::new();

    let deliver = |current: &mut [f64], source: usize| {
        for &e in net.outgoing(source) {
            current[net.edges()[e].target] += net.weights()[e];
        }
    };

    let steps = (t_max / dt).ceil() as usize;
    let mut next_arrival = 0;
    for step in 0..steps {
        let t0 = step as f64 * dt;
        let t1 = t0 + dt;
        while next_arrival < arrivals.len() && arrivals[next_arrival].0 < t1 {
            deliver(&mut current, arrivals[next_arrival].1);
            next_arrival += 1;
        }
        for &source in &fired_last_step {
            deliver(&mut current, source);
        }
        fired_now.clear();
        for &i in &dynamic {
            let v = potential[i] + dt * (current[i] - beta * potential[i]);
            current[i] -= dt * alpha * current[i];
            potential[i] = v;
            if v >= theta {
                potential[i] -= theta;
                fires[i].push(t0 + 0.5 * dt);
                fired_now.push(i);
            }
        }
        std::mem::swap(&mut fired_last_step, &mut fired_now);
    }
    FiringRecord::from_per_neuron(fires)
}
