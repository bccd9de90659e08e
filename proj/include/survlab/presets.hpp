#pragma once

#include "survlab/datagen.hpp"
#include "survlab/mlp.hpp"
#include "survlab/sweep.hpp"

namespace survlab {

// Full-scale data configuration: n=3500, p=200, 50 relevant covariates,
// AR(1) 0.6, Weibull shape 0.7, uniform censoring on (0, 0.8), cutoff 0.6.
// The censoring share depends on the realized coefficient draw (the mechanism
// averages near 63%; a draw with positive coefficient sum lands lower), so the
// default seed is fixed at one whose dataset sits at the reference operating
// point: 55.7% censored, eta rms 0.375.
inline GenConfig paper_gen_config() {
  GenConfig cfg;
  cfg.n = 3500;
  cfg.p = 200;
  cfg.s = 50;
  cfg.rho = 0.6;
  cfg.beta_range = 0.5;
  cfg.scale = 0.31;
  cfg.gamma = 0.7;
  cfg.cens_hi = 0.8;
  cfg.tau = 0.6;
  cfg.seed = 40;
  return cfg;
}

// Shrunk generator for the desk sweep: same mechanism, laptop-sized.
inline GenConfig desk_gen_config() {
  GenConfig cfg = paper_gen_config();
  cfg.n = 400;
  cfg.p = 30;
  cfg.s = 10;
  cfg.seed = 11;
  return cfg;
}

// The full protocol: every batch size and learning rate combination, 30
// replicates, medians across hyperparameter cells. Days of compute; kept as
// a faithful reference configuration. The scalar-risk model was run at p=60
// in the source experiments; override data.p accordingly when sweeping it
// alone.
inline SweepConfig paper_sweep_config() {
  SweepConfig cfg;
  cfg.models = {LossKind::deepsurv, LossKind::pchazard, LossKind::nnet, LossKind::nmtlr};
  cfg.widths = {2, 4, 8, 16, 32, 64, 128, 256};
  cfg.lrs = {5e-5, 1e-4, 3e-4, 5e-4, 1e-3, 2e-3};
  cfg.batches = {32, 64, 128, 256};
  cfg.replicates = 30;
  cfg.base_seed = 101;
  cfg.data = paper_gen_config();
  cfg.train_frac = 0.7;
  cfg.m_pchazard = 50;
  cfg.m_interval = 20;
  cfg.train.max_epochs = 2000;
  cfg.train.plateau_window = 20;
  cfg.train.plateau_rel = 1e-4;
  cfg.jobs = 1;
  return cfg;
}

// Desk preset: single full-batch hyperparameter cell per width so the whole
// four-model sweep finishes on one core in well under half an hour. Every
// cell runs the full epoch budget: plateau stopping halts wide nets hundreds
// of epochs before the narrow ones and that skew, not capacity, would then
// dominate the loss-versus-width profile. The window equal to the budget
// disables the stop without changing the trainer contract.
inline SweepConfig desk_sweep_config() {
  SweepConfig cfg = paper_sweep_config();
  cfg.data = desk_gen_config();
  cfg.lrs = {1e-2};
  cfg.batches = {400};  // >= n, so batches cover the whole training split
  cfg.replicates = 5;
  cfg.base_seed = 101;
  cfg.train.max_epochs = 2000;
  cfg.train.plateau_window = 2000;
  cfg.train.plateau_rel = 1e-4;
  return cfg;
}

}  // namespace survlab
