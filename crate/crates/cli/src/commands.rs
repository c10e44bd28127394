//! Each command turns a configuration into one table.

use udn::analytic::{coverage_limit, dense_coverage_approx, power_law_factors};
use udn::capacity::{ase_finite, ase_limit, solve_bs_deployment, solve_ue_scheduling, Engine};
use udn::deployment::NetworkParams;
use udn::simulator::{estimate_active_density, estimate_coverage, MonteCarloConfig};
use udn::units::{db_to_linear, km_to_m};

use crate::config::{Command, RunConfig};
use crate::fail::Failure;
use crate::output::Table;

const FIG1_RHO: [f64; 2] = [300.0, 600.0];
const FIG1_HEIGHTS_M: [f64; 2] = [3.5, 8.5];
const FIG2_RHO: [f64; 4] = [300.0, 600.0, 1000.0, 2000.0];

pub fn execute(cfg: &RunConfig, command: Command, workers: Option<usize>) -> Result<Table, Failure> {
    let ctx = Context {
        cfg,
        params: cfg.scenario.to_params()?,
        model: cfg.model.build()?,
        quad: cfg.quadrature(),
        workers,
    };
    match command {
        Command::Limit => ctx.limit(),
        Command::CoverageSweep => ctx.coverage_sweep(),
        Command::Simulate => ctx.simulate(),
        Command::AseSweep => ctx.ase_sweep(),
        Command::Deploy => ctx.deploy(),
        Command::Schedule => ctx.schedule(),
        Command::ReproduceFig1 => ctx.fig1(),
        Command::ReproduceFig2 => ctx.fig2(),
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    params: NetworkParams,
    model: udn::channel::PathLossModel,
    quad: udn::quadrature::QuadratureSpec,
    workers: Option<usize>,
}

impl Context<'_> {
    fn gamma(&self) -> f64 {
        db_to_linear(self.cfg.sweep.gamma_db)
    }

    fn mc(&self) -> Result<MonteCarloConfig, Failure> {
        self.cfg.monte_carlo(self.workers)
    }

    fn limit(&self) -> Result<Table, Failure> {
        let p = &self.params;
        let f = power_law_factors(p, &self.model, self.gamma(), &self.quad)?;
        let mut t = Table::new(&[
            "rho", "height_m", "gamma_db", "pcov_limit", "c", "g", "gamma0_db", "ase_limit",
        ]);
        t.push(vec![
            p.rho.into(),
            km_to_m(p.height_km).into(),
            self.cfg.sweep.gamma_db.into(),
            coverage_limit(p, &self.model, self.gamma(), &self.quad)?.into(),
            f.c.into(),
            f.g.into(),
            self.cfg.scenario.gamma0_db.into(),
            ase_limit(p, &self.model, p.gamma0, &self.quad)?.into(),
        ]);
        Ok(t)
    }

    fn coverage_sweep(&self) -> Result<Table, Failure> {
        let mut t = Table::new(&[
            "lambda", "rho", "gamma_db", "pcov_limit", "pcov_dense_approx", "c", "g",
        ]);
        let gamma = self.gamma();
        for rho in self.cfg.rho_axis(&[self.params.rho])? {
            let p = self.params.with_rho(rho);
            let limit = coverage_limit(&p, &self.model, gamma, &self.quad)?;
            let f = power_law_factors(&p, &self.model, gamma, &self.quad)?;
            for lambda in self.cfg.lambda_grid()? {
                let dense = dense_coverage_approx(&p.with_lambda(lambda), &self.model, gamma, &self.quad)?;
                t.push(vec![
                    lambda.into(),
                    rho.into(),
                    self.cfg.sweep.gamma_db.into(),
                    limit.into(),
                    dense.into(),
                    f.c.into(),
                    f.g.into(),
                ]);
            }
        }
        Ok(t)
    }

    fn simulate(&self) -> Result<Table, Failure> {
        let p = &self.params;
        let mc = self.mc()?;
        let c = estimate_coverage(p, &self.model, self.gamma(), &mc)?;
        let d = estimate_active_density(p, &self.model, &mc)?;
        let mut t = Table::new(&[
            "lambda",
            "rho",
            "height_m",
            "gamma_db",
            "pcov_mc",
            "pcov_stderr",
            "active_density_mc",
            "trials",
            "seed",
        ]);
        t.push(vec![
            p.lambda.into(),
            p.rho.into(),
            km_to_m(p.height_km).into(),
            self.cfg.sweep.gamma_db.into(),
            c.mean.into(),
            c.std_error.into(),
            d.mean.into(),
            c.trials.into(),
            mc.seed.into(),
        ]);
        Ok(t)
    }

    fn ase_sweep(&self) -> Result<Table, Failure> {
        let engine = self.cfg.engine(self.workers)?;
        let mut t = Table::new(&[
            "lambda", "rho", "gamma0_db", "ase", "ase_limit", "engine", "uncertainty",
        ]);
        for rho in self.cfg.rho_axis(&[self.params.rho])? {
            let p = self.params.with_rho(rho);
            let limit = ase_limit(&p, &self.model, p.gamma0, &self.quad)?;
            for lambda in self.cfg.lambda_grid()? {
                let a = ase_finite(&p.with_lambda(lambda), &self.model, p.gamma0, &engine, &self.quad)?;
                t.push(vec![
                    lambda.into(),
                    rho.into(),
                    self.cfg.scenario.gamma0_db.into(),
                    a.value.into(),
                    limit.into(),
                    engine.name().into(),
                    a.uncertainty.into(),
                ]);
            }
        }
        Ok(t)
    }

    fn deploy(&self) -> Result<Table, Failure> {
        let engine = self.cfg.engine(self.workers)?;
        let s = solve_bs_deployment(&self.params, &self.model, &engine, &self.quad)?;
        let v = s.verification;
        let mut t = Table::new(&[
            "lambda_star",
            "target",
            "achieved",
            "ase_limit",
            "iterations",
            "bracket_lower",
            "bracket_upper",
            "ssr_density",
            "engine",
            "verification_ase",
            "verification_stderr",
            "verification_passed",
        ]);
        t.push(vec![
            s.located_value.into(),
            s.target.into(),
            s.achieved_ase.into(),
            s.ase_limit.into(),
            s.iterations.into(),
            s.bracket.0.into(),
            s.bracket.1.into(),
            s.implied_ssr_density.into(),
            engine.name().into(),
            v.map(|v| v.ase).into(),
            v.map(|v| v.std_error).into(),
            v.map(|v| v.passed).into(),
        ]);
        Ok(t)
    }

    fn schedule(&self) -> Result<Table, Failure> {
        let engine = self.cfg.engine(self.workers)?;
        let p = &self.params;
        let s = solve_ue_scheduling(p, &self.model, p.gamma0, &engine, &self.quad)?;
        let check = |i: usize| s.endpoint_checks.get(i).copied();
        let mut t = Table::new(&[
            "lambda",
            "rho_star",
            "ase",
            "implied_ssr_density",
            "iterations",
            "bracket_lower",
            "bracket_upper",
            "unimodal",
            "engine",
            "ase_mc_lower",
            "ase_mc_lower_stderr",
            "ase_mc_upper",
            "ase_mc_upper_stderr",
        ]);
        t.push(vec![
            p.lambda.into(),
            s.located_value.into(),
            s.achieved_ase.into(),
            s.implied_ssr_density.into(),
            s.iterations.into(),
            s.bracket.0.into(),
            s.bracket.1.into(),
            s.unimodal.into(),
            engine.name().into(),
            check(0).map(|e| e.ase).into(),
            check(0).map(|e| e.std_error).into(),
            check(1).map(|e| e.ase).into(),
            check(1).map(|e| e.std_error).into(),
        ]);
        Ok(t)
    }

    fn fig1(&self) -> Result<Table, Failure> {
        let gamma = self.gamma();
        let mc = self.mc()?;
        let mut t = Table::new(&[
            "lambda",
            "rho",
            "height_m",
            "gamma_db",
            "pcov_mc",
            "pcov_stderr",
            "pcov_dense_approx",
            "pcov_limit",
        ]);
        for rho in self.cfg.rho_axis(&FIG1_RHO)? {
            for h in self.cfg.height_axis(&FIG1_HEIGHTS_M)? {
                let p = self.params.with_rho(rho).with_height_m(h);
                let limit = coverage_limit(&p, &self.model, gamma, &self.quad)?;
                for lambda in self.cfg.lambda_grid()? {
                    let p = p.with_lambda(lambda);
                    let c = estimate_coverage(&p, &self.model, gamma, &mc)?;
                    t.push(vec![
                        lambda.into(),
                        rho.into(),
                        h.into(),
                        self.cfg.sweep.gamma_db.into(),
                        c.mean.into(),
                        c.std_error.into(),
                        dense_coverage_approx(&p, &self.model, gamma, &self.quad)?.into(),
                        limit.into(),
                    ]);
                }
            }
        }
        Ok(t)
    }

    fn fig2(&self) -> Result<Table, Failure> {
        let mc = Engine::MonteCarlo(self.mc()?);
        let mut t = Table::new(&[
            "lambda",
            "rho",
            "height_m",
            "gamma0_db",
            "ase_mc",
            "ase_mc_stderr",
            "ase_dense_approx",
            "ase_limit",
        ]);
        let h = km_to_m(self.params.height_km);
        for rho in self.cfg.rho_axis(&FIG2_RHO)? {
            let p = self.params.with_rho(rho);
            let limit = ase_limit(&p, &self.model, p.gamma0, &self.quad)?;
            for lambda in self.cfg.lambda_grid()? {
                let p = p.with_lambda(lambda);
                let sim = ase_finite(&p, &self.model, p.gamma0, &mc, &self.quad)?;
                let dense = ase_finite(&p, &self.model, p.gamma0, &Engine::DenseApprox, &self.quad)?;
                t.push(vec![
                    lambda.into(),
                    rho.into(),
                    h.into(),
                    self.cfg.scenario.gamma0_db.into(),
                    sim.value.into(),
                    sim.uncertainty.into(),
                    dense.value.into(),
                    limit.into(),
                ]);
            }
        }
        Ok(t)
    }
}
