//! Exact ReLU computation graphs for the zonotope signed distance.
//!
//! A [`Graph`] is a chain of sparse affine layers, elementwise ReLU layers,
//! pairwise Euclidean norms and a sign gate. Minima are built from the
//! four-unit gadget
//!
//! `min(x, y) = ½ReLU(x+y) − ½ReLU(−x−y) − ½ReLU(x−y) − ½ReLU(y−x)`,
//!
//! arranged as a balanced tree. An unpaired value at some level is carried
//! through the identity `x = ReLU(x) − ReLU(−x)`, which keeps every level one
//! ReLU layer deep without introducing large sentinel constants.
//!
//! Depth counts nonlinear layers (ReLU and norm); width is the largest layer
//! output.

use rayon::prelude::*;
use serde::Serialize;

use crate::distance::{BufferedBoundary, Segment};
use crate::error::{Error, Result};
use crate::zonotope::{Mat2, Vec2, Zonotope};

const INPUT_FLAG: u32 = 1 << 31;
/// Norms below this have their gradient set to zero.
pub const NORM_GRAD_GUARD: f64 = 1e-12;

/// Source of an affine term: an output of the previous layer or a graph input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Src {
    Prev(usize),
    Input(usize),
}

impl Src {
    fn encode(self) -> u32 {
        match self {
            Src::Prev(i) => i as u32,
            Src::Input(i) => i as u32 | INPUT_FLAG,
        }
    }
}

/// Sparse affine map in CSR form. Columns with [`INPUT_FLAG`] set read the
/// graph input instead of the previous layer.
#[derive(Debug, Clone, Default)]
pub struct AffineLayer {
    row_ptr: Vec<u32>,
    cols: Vec<u32>,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl AffineLayer {
    pub fn new() -> Self {
        AffineLayer {
            row_ptr: vec![0],
            ..Default::default()
        }
    }

    pub fn push_row(&mut self, bias: f64, terms: &[(Src, f64)]) {
        for &(src, w) in terms {
            self.cols.push(src.encode());
            self.weights.push(w);
        }
        self.bias.push(bias);
        self.row_ptr.push(self.cols.len() as u32);
    }

    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    fn apply(&self, prev: &[f64], input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.bias.len() {
            let mut acc = self.bias[r];
            for k in self.row_ptr[r] as usize..self.row_ptr[r + 1] as usize {
                let c = self.cols[k];
                let x = if c & INPUT_FLAG != 0 {
                    input[(c & !INPUT_FLAG) as usize]
                } else {
                    prev[c as usize]
                };
                acc += self.weights[k] * x;
            }
            out.push(acc);
        }
    }

    fn backprop(&self, adj_out: &[f64], adj_prev: &mut [f64], adj_input: &mut [f64]) {
        for (r, &a) in adj_out.iter().enumerate().take(self.bias.len()) {
            if a == 0.0 {
                continue;
            }
            for k in self.row_ptr[r] as usize..self.row_ptr[r + 1] as usize {
                let c = self.cols[k];
                if c & INPUT_FLAG != 0 {
                    adj_input[(c & !INPUT_FLAG) as usize] += self.weights[k] * a;
                } else {
                    adj_prev[c as usize] += self.weights[k] * a;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Affine(AffineLayer),
    /// Elementwise ReLU. The flag gives the derivative used at exactly zero,
    /// which fixes which branch of a tie the gradient follows.
    Relu { grad_at_zero: Vec<bool> },
    /// Maps `2n` values to the `n` norms of consecutive pairs.
    Norm2,
    /// Multiplies each value by an externally supplied ±1.
    SignGate,
}

impl Layer {
    fn kind(&self) -> &'static str {
        match self {
            Layer::Affine(_) => "affine",
            Layer::Relu { .. } => "relu",
            Layer::Norm2 => "norm2",
            Layer::SignGate => "sign_gate",
        }
    }

    fn is_nonlinear(&self) -> bool {
        matches!(self, Layer::Relu { .. } | Layer::Norm2)
    }
}

#[derive(Debug, Clone)]
pub struct Graph {
    input_dim: usize,
    layers: Vec<Layer>,
    dims: Vec<usize>,
}

/// Activations recorded by a forward pass, consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct GradientTape {
    pub activations: Vec<Vec<f64>>,
    pub adjoints: Vec<Vec<f64>>,
}

impl Graph {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap_or(&self.input_dim)
    }

    pub fn width(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(0)
    }

    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| l.is_nonlinear()).count()
    }

    fn run(&self, input: &[f64], gates: &[f64], keep: bool) -> (Vec<f64>, Vec<Vec<f64>>) {
        assert_eq!(input.len(), self.input_dim, "graph input dimension");
        let mut acts: Vec<Vec<f64>> = Vec::new();
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Affine(a) => a.apply(&cur, input, &mut next),
                Layer::Relu { .. } => {
                    next.clear();
                    next.extend(cur.iter().map(|&x| if x > 0.0 { x } else { 0.0 }));
                }
                Layer::Norm2 => {
                    next.clear();
                    next.extend(cur.chunks_exact(2).map(|p| p[0].hypot(p[1])));
                }
                Layer::SignGate => {
                    assert_eq!(gates.len(), cur.len(), "sign gate dimension");
                    next.clear();
                    next.extend(cur.iter().zip(gates).map(|(x, s)| x * s));
                }
            }
            if keep {
                acts.push(std::mem::take(&mut cur));
                cur = next.clone();
            } else {
                std::mem::swap(&mut cur, &mut next);
            }
        }
        if keep {
            acts.push(cur.clone());
        }
        (cur, acts)
    }

    pub fn forward(&self, input: &[f64], gates: &[f64]) -> Vec<f64> {
        self.run(input, gates, false).0
    }

    /// Forward pass keeping activations, then reverse accumulation of the
    /// adjoint of output 0. Returns the output vector, the gradient of output
    /// 0 with respect to the input, and the tape.
    pub fn forward_backward(&self, input: &[f64], gates: &[f64]) -> (Vec<f64>, Vec<f64>, GradientTape) {
        let (out, acts) = self.run(input, gates, true);
        let mut adjoints: Vec<Vec<f64>> = acts.iter().map(|a| vec![0.0; a.len()]).collect();
        let mut adj_input = vec![0.0; self.input_dim];
        if let Some(last) = adjoints.last_mut() {
            if !last.is_empty() {
                last[0] = 1.0;
            }
        }
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let (lo, hi) = adjoints.split_at_mut(li + 1);
            let adj_in = &mut lo[li];
            let adj_out = &hi[0];
            let x = &acts[li];
            match layer {
                Layer::Affine(a) => a.backprop(adj_out, adj_in, &mut adj_input),
                Layer::Relu { grad_at_zero } => {
                    for i in 0..x.len() {
                        let d = x[i] > 0.0 || (x[i] == 0.0 && grad_at_zero[i]);
                        if d {
                            adj_in[i] += adj_out[i];
                        }
                    }
                }
                Layer::Norm2 => {
                    let y = &acts[li + 1];
                    for k in 0..y.len() {
                        if y[k] >= NORM_GRAD_GUARD {
                            adj_in[2 * k] += adj_out[k] * x[2 * k] / y[k];
                            adj_in[2 * k + 1] += adj_out[k] * x[2 * k + 1] / y[k];
                        }
                    }
                }
                Layer::SignGate => {
                    for i in 0..x.len() {
                        adj_in[i] += adj_out[i] * gates[i];
                    }
                }
            }
        }
        for (g, a) in adj_input.iter_mut().zip(&adjoints[0]) {
            *g += a;
        }
        (
            out,
            adj_input,
            GradientTape {
                activations: acts,
                adjoints,
            },
        )
    }

    pub fn summary(&self) -> GraphSummary {
        GraphSummary {
            input_dim: self.input_dim,
            width: self.width(),
            depth: self.depth(),
            layers: self
                .layers
                .iter()
                .zip(&self.dims)
                .map(|(l, &d)| LayerSummary {
                    kind: l.kind(),
                    out_dim: d,
                    nnz: match l {
                        Layer::Affine(a) => a.nnz(),
                        _ => 0,
                    },
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerSummary {
    pub kind: &'static str,
    pub out_dim: usize,
    pub nnz: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub input_dim: usize,
    pub width: usize,
    pub depth: usize,
    pub layers: Vec<LayerSummary>,
}

pub struct GraphBuilder {
    input_dim: usize,
    layers: Vec<Layer>,
    dims: Vec<usize>,
}

impl GraphBuilder {
    pub fn new(input_dim: usize) -> Self {
        GraphBuilder {
            input_dim,
            layers: Vec::new(),
            dims: Vec::new(),
        }
    }

    pub fn current_dim(&self) -> usize {
        *self.dims.last().unwrap_or(&self.input_dim)
    }

    pub fn affine(&mut self, layer: AffineLayer) {
        self.dims.push(layer.out_dim());
        self.layers.push(Layer::Affine(layer));
    }

    pub fn relu(&mut self, grad_at_zero: Vec<bool>) {
        assert_eq!(grad_at_zero.len(), self.current_dim());
        self.dims.push(self.current_dim());
        self.layers.push(Layer::Relu { grad_at_zero });
    }

    pub fn norm2(&mut self) {
        assert_eq!(self.current_dim() % 2, 0);
        self.dims.push(self.current_dim() / 2);
        self.layers.push(Layer::Norm2);
    }

    pub fn sign_gate(&mut self) {
        self.dims.push(self.current_dim());
        self.layers.push(Layer::SignGate);
    }

    /// Reduces contiguous groups of the current values to their minima, one
    /// pairing level at a time, until every group holds a single value.
    pub fn min_groups(&mut self, mut groups: Vec<usize>) {
        assert_eq!(groups.iter().sum::<usize>(), self.current_dim());
        assert!(groups.iter().all(|&n| n >= 1));
        while groups.iter().any(|&n| n > 1) {
            let mut pre = AffineLayer::new();
            let mut flags = Vec::new();
            let mut combine = AffineLayer::new();
            let mut offset = 0;
            for n in groups.iter_mut() {
                for k in (0..*n).step_by(2) {
                    let x = Src::Prev(offset + k);
                    let u = pre.out_dim();
                    if k + 1 < *n {
                        let y = Src::Prev(offset + k + 1);
                        pre.push_row(0.0, &[(x, 1.0), (y, 1.0)]);
                        pre.push_row(0.0, &[(x, -1.0), (y, -1.0)]);
                        pre.push_row(0.0, &[(x, 1.0), (y, -1.0)]);
                        pre.push_row(0.0, &[(x, -1.0), (y, 1.0)]);
                        flags.extend([true, false, false, true]);
                        combine.push_row(
                            0.0,
                            &[
                                (Src::Prev(u), 0.5),
                                (Src::Prev(u + 1), -0.5),
                                (Src::Prev(u + 2), -0.5),
                                (Src::Prev(u + 3), -0.5),
                            ],
                        );
                    } else {
                        pre.push_row(0.0, &[(x, 1.0)]);
                        pre.push_row(0.0, &[(x, -1.0)]);
                        flags.extend([true, false]);
                        combine.push_row(0.0, &[(Src::Prev(u), 1.0), (Src::Prev(u + 1), -1.0)]);
                    }
                }
                offset += *n;
                *n = n.div_ceil(2);
            }
            self.affine(pre);
            self.relu(flags);
            self.affine(combine);
        }
    }

    pub fn finish(self) -> Graph {
        Graph {
            input_dim: self.input_dim,
            layers: self.layers,
            dims: self.dims,
        }
    }
}

/// `min(x, y)` through the four-unit gadget.
pub fn relu_min_pair(x: f64, y: f64) -> f64 {
    let r = |v: f64| if v > 0.0 { v } else { 0.0 };
    0.5 * r(x + y) - 0.5 * r(-x - y) - 0.5 * r(x - y) - 0.5 * r(y - x)
}

/// `max(x, y)` through the four-unit gadget.
pub fn relu_max_pair(x: f64, y: f64) -> f64 {
    let r = |v: f64| if v > 0.0 { v } else { 0.0 };
    0.5 * r(x + y) - 0.5 * r(-x - y) + 0.5 * r(-x + y) + 0.5 * r(x - y)
}

#[derive(Debug, Clone)]
pub struct MinTree {
    pub graph: Graph,
}

impl MinTree {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput("relu_min_tree"));
        }
        let mut b = GraphBuilder::new(n);
        b.min_groups(vec![n]);
        Ok(MinTree { graph: b.finish() })
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        if self.graph.layers.is_empty() {
            return values[0];
        }
        self.graph.forward(values, &[])[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinTreeResult {
    pub value: f64,
    pub width: usize,
    pub depth: usize,
}

pub fn relu_min_tree(values: &[f64]) -> Result<MinTreeResult> {
    let tree = MinTree::new(values.len())?;
    Ok(MinTreeResult {
        value: tree.eval(values),
        width: tree.graph.width(),
        depth: tree.graph.depth(),
    })
}

pub fn width_bound(n_segments: usize) -> usize {
    4 * n_segments.div_ceil(2) + 8
}

pub fn depth_bound(n_segments: usize) -> usize {
    2 * (usize::BITS - 1 - n_segments.max(1).leading_zeros()) as usize + 4
}

/// Affine input coupling `c_z = base + jac · p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamInput {
    pub base: Vec2,
    pub jac: Mat2,
    pub p: Vec2,
}

impl ParamInput {
    pub fn center(&self) -> Vec2 {
        self.base + self.jac * self.p
    }
}

/// Signed distance from a zonotope center to a set of buffered obstacles,
/// as a ReLU graph with the obstacle boundaries baked in as constants.
#[derive(Debug, Clone)]
pub struct SdfGraph {
    graph: Graph,
    boundaries: Vec<BufferedBoundary>,
    segment_counts: Vec<usize>,
}

pub fn build_sdf_graph(z: &Zonotope, obstacles: &[Zonotope]) -> Result<SdfGraph> {
    let boundaries = obstacles
        .iter()
        .map(|o| BufferedBoundary::from_pair(z, o))
        .collect();
    SdfGraph::from_boundaries(boundaries)
}

impl SdfGraph {
    pub fn from_boundaries(boundaries: Vec<BufferedBoundary>) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::NoObstacles);
        }
        let segments: Vec<Segment> = boundaries
            .iter()
            .flat_map(|b| b.segments.iter().copied())
            .collect();
        let segment_counts: Vec<usize> = boundaries.iter().map(|b| b.segments.len()).collect();
        let n = segments.len();
        let mut b = GraphBuilder::new(2);

        // Projection parameter t̂ = (c_z − a)·e/‖e‖² and t̂ − 1.
        let mut proj = AffineLayer::new();
        for s in &segments {
            let e = s.b - s.a;
            let len2 = e.dot(&e);
            if len2 == 0.0 {
                proj.push_row(0.0, &[]);
                proj.push_row(-1.0, &[]);
                continue;
            }
            let w = e / len2;
            let bias = -w.dot(&s.a);
            let terms = [(Src::Input(0), w.x), (Src::Input(1), w.y)];
            proj.push_row(bias, &terms);
            proj.push_row(bias - 1.0, &terms);
        }
        b.affine(proj);
        // clamp(t̂, 0, 1) = ReLU(t̂) − ReLU(t̂ − 1).
        b.relu(vec![false; 2 * n]);

        // c_z − a − e·t*.
        let mut diff = AffineLayer::new();
        for (l, s) in segments.iter().enumerate() {
            let e = s.b - s.a;
            for d in 0..2 {
                diff.push_row(
                    -s.a[d],
                    &[
                        (Src::Input(d), 1.0),
                        (Src::Prev(2 * l), -e[d]),
                        (Src::Prev(2 * l + 1), e[d]),
                    ],
                );
            }
        }
        b.affine(diff);
        b.norm2();

        b.min_groups(segment_counts.clone());
        b.sign_gate();
        b.min_groups(vec![boundaries.len()]);

        let graph = b.finish();
        let g = SdfGraph {
            graph,
            boundaries,
            segment_counts,
        };
        g.audit()?;
        Ok(g)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn boundaries(&self) -> &[BufferedBoundary] {
        &self.boundaries
    }

    pub fn segment_count(&self) -> usize {
        self.segment_counts.iter().sum()
    }

    pub fn width(&self) -> usize {
        self.graph.width()
    }

    pub fn depth(&self) -> usize {
        self.graph.depth()
    }

    /// Checks the width and depth bounds in terms of the total segment count.
    pub fn audit(&self) -> Result<()> {
        let n = self.segment_count();
        let (w, d) = (self.width(), self.depth());
        if w > width_bound(n) || d > depth_bound(n) {
            return Err(Error::BoundViolation(format!(
                "N={n}: width {w} (bound {}), depth {d} (bound {})",
                width_bound(n),
                depth_bound(n)
            )));
        }
        Ok(())
    }

    fn gates(&self, cz: &Vec2) -> Vec<f64> {
        self.boundaries
            .iter()
            .map(|b| if b.contains(cz) { -1.0 } else { 1.0 })
            .collect()
    }

    pub fn forward(&self, cz: &Vec2) -> f64 {
        self.graph.forward(&[cz.x, cz.y], &self.gates(cz))[0]
    }

    /// Value and gradient with respect to the center `c_z`.
    pub fn forward_backward_center(&self, cz: &Vec2) -> (f64, Vec2) {
        let (out, grad, _) = self.graph.forward_backward(&[cz.x, cz.y], &self.gates(cz));
        (out[0], Vec2::new(grad[0], grad[1]))
    }

    /// Value and gradient with respect to the trajectory parameter, chained
    /// through `c_z = base + jac · p`.
    pub fn forward_backward(&self, input: &ParamInput) -> (f64, Vec2) {
        let (value, g) = self.forward_backward_center(&input.center());
        (value, input.jac.transpose() * g)
    }

    pub fn summary(&self) -> SdfGraphSummary {
        SdfGraphSummary {
            segments: self.segment_count(),
            segments_per_obstacle: self.segment_counts.clone(),
            width_bound: width_bound(self.segment_count()),
            depth_bound: depth_bound(self.segment_count()),
            graph: self.graph.summary(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SdfGraphSummary {
    pub segments: usize,
    pub segments_per_obstacle: Vec<usize>,
    pub width_bound: usize,
    pub depth_bound: usize,
    pub graph: GraphSummary,
}

/// Evaluates many graphs in parallel; each result is identical to the
/// corresponding single evaluation.
pub fn evaluate_batch(graphs: &[&SdfGraph], inputs: &[ParamInput]) -> Vec<(f64, Vec2)> {
    assert_eq!(graphs.len(), inputs.len());
    graphs
        .par_iter()
        .zip(inputs.par_iter())
        .map(|(g, x)| g.forward_backward(x))
        .collect()
}
