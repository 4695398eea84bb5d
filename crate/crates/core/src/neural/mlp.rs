//! Fully connected network: rectifier hidden layers, identity output.
//!
//! Weights of layer `l` are stored row-major as `out × in`. Inputs are
//! mostly one-hot, so the first layer skips zero inputs in both passes.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Gradients with the same layout as an [`Mlp`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Activations from one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `layers[0]` is the input; `layers[l]` is the post-activation output
    /// of layer `l`.
    layers: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("trace has an input layer")
    }
}

impl Mlp {
    /// All-zero network.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!(
                "network needs at least an input and an output layer of nonzero width, got {sizes:?}"
            )));
        }
        let weights = sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect();
        let biases = sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Ok(Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// He-uniform weights, zero biases. The output layer is scaled down so
    /// initial values start near zero like a zero-initialised table.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let last = net.weights.len() - 1;
        for (l, w) in net.weights.iter_mut().enumerate() {
            let fan_in = sizes[l] as f64;
            let mut limit = (6.0 / fan_in).sqrt();
            if l == last {
                limit *= 0.1;
            }
            for x in w.iter_mut() {
                *x = rng.gen_range(-limit..limit);
            }
        }
        Ok(net)
    }

    /// Builds a network from explicit parameters.
    pub fn from_parts(sizes: &[usize], weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>) -> Result<Self> {
        let net = Self::zeros(sizes)?;
        if weights.len() != net.weights.len() || biases.len() != net.biases.len() {
            return Err(Error::Dimension {
                what: "layer count",
                expected: net.weights.len(),
                actual: weights.len().min(biases.len()),
            });
        }
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.len() != net.weights[l].len() {
                return Err(Error::Dimension {
                    what: "weight matrix",
                    expected: net.weights[l].len(),
                    actual: w.len(),
                });
            }
            if b.len() != net.biases[l].len() {
                return Err(Error::Dimension {
                    what: "bias vector",
                    expected: net.biases[l].len(),
                    actual: b.len(),
                });
            }
        }
        if weights.iter().chain(&biases).flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("network parameters"));
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).flatten().all(|x| x.is_finite())
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(input)?.layers.pop().expect("output layer"))
    }

    /// Forward pass that keeps every layer's activations.
    pub fn trace(&self, input: &[f64]) -> Result<Trace> {
        if input.len() != self.sizes[0] {
            return Err(Error::Dimension {
                what: "network input",
                expected: self.sizes[0],
                actual: input.len(),
            });
        }
        let depth = self.weights.len();
        let mut layers = Vec::with_capacity(depth + 1);
        layers.push(input.to_vec());
        for l in 0..depth {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let x = &layers[l];
            let w = &self.weights[l];
            let mut y = self.biases[l].clone();
            if l == 0 {
                for (k, &xk) in x.iter().enumerate() {
                    if xk != 0.0 {
                        for (i, yi) in y.iter_mut().enumerate() {
                            *yi += w[i * n_in + k] * xk;
                        }
                    }
                }
            } else {
                for (i, yi) in y.iter_mut().enumerate() {
                    let row = &w[i * n_in..(i + 1) * n_in];
                    *yi += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            if l + 1 < depth {
                for v in &mut y {
                    *v = v.max(0.0);
                }
            }
            debug_assert_eq!(y.len(), n_out);
            layers.push(y);
        }
        Ok(Trace { layers })
    }

    /// Adds the gradient of a scalar loss to `grads`, given the loss
    /// gradient with respect to the output of the traced pass.
    pub fn backward(&self, trace: &Trace, output_grad: &[f64], grads: &mut Gradients) -> Result<()> {
        if output_grad.len() != self.output_size() {
            return Err(Error::Dimension {
                what: "output gradient",
                expected: self.output_size(),
                actual: output_grad.len(),
            });
        }
        let depth = self.weights.len();
        let mut delta = output_grad.to_vec();
        for l in (0..depth).rev() {
            let n_in = self.sizes[l];
            let x = &trace.layers[l];
            let w = &self.weights[l];
            for (gb, d) in grads.biases[l].iter_mut().zip(&delta) {
                *gb += d;
            }
            let gw = &mut grads.weights[l];
            for (i, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut gw[i * n_in..(i + 1) * n_in];
                if l == 0 {
                    for (k, &xk) in x.iter().enumerate() {
                        if xk != 0.0 {
                            row[k] += d * xk;
                        }
                    }
                } else {
                    for (g, &xk) in row.iter_mut().zip(x) {
                        *g += d * xk;
                    }
                }
            }
            if l == 0 {
                break;
            }
            // Propagate through the weights, then through the rectifier of
            // the layer below.
            let mut below = vec![0.0; n_in];
            for (i, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (b, &wik) in below.iter_mut().zip(&w[i * n_in..(i + 1) * n_in]) {
                    *b += d * wik;
                }
            }
            for (b, &a) in below.iter_mut().zip(x) {
                if a <= 0.0 {
                    *b = 0.0;
                }
            }
            delta = below;
        }
        Ok(())
    }

    /// Plain gradient descent: `θ ← θ − lr · g`.
    pub fn apply(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            for (p, d) in w.iter_mut().zip(g) {
                *p -= lr * d;
            }
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            for (p, d) in b.iter_mut().zip(g) {
                *p -= lr * d;
            }
        }
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite("network parameters after update"))
        }
    }

    /// Copies every parameter from `other`, which must have the same shape.
    pub fn copy_from(&mut self, other: &Mlp) {
        debug_assert_eq!(self.sizes, other.sizes);
        self.weights.clone_from(&other.weights);
        self.biases.clone_from(&other.biases);
    }
}
