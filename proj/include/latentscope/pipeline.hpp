#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "latentscope/common.hpp"
#include "latentscope/config.hpp"
#include "latentscope/csv.hpp"
#include "latentscope/hmc.hpp"
#include "latentscope/mixture.hpp"
#include "latentscope/nn.hpp"
#include "latentscope/signalgen.hpp"
#include "latentscope/stats.hpp"
#include "latentscope/svg.hpp"
#include "latentscope/vae.hpp"

namespace latentscope::pipeline {

namespace fs = std::filesystem;

struct DataConfig {
    signalgen::MassGrid grid{25.0, 33.0, 0.5};
    double f_min = 35.0;
    double sample_rate = 1024.0;
    double duration = 0.25;
    double amplitude = 0.05;
    std::size_t target_len = 256;
    std::vector<signalgen::DetectorProfile> detectors = {
        {"H1", 1.0, 0}, {"L1", 0.9, 2}, {"V1", 0.8, 4}};
    signalgen::NoiseSpec noise{-1.0, 1e-7, 64.0, 0};
    // The source models these mimic carry spins; the surrogate has no spin
    // terms, so the values are bookkeeping only.
    double spin1 = 0.7;
    double spin2 = 0.9;
};

struct PriorConfig {
    mixture::FitConfig fit;
};

struct HmcStageConfig {
    hmc::HmcConfig sampler;
    std::size_t n_chains = 32;
    std::string test_target = "none";  // none | std_normal | bimodal
};

struct ReportConfig {
    std::size_t bins = 40;
    std::size_t null_samples = 4000;
    bool self_comparison = false;
};

struct PipelineConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "out";
    DataConfig data;
    vae::ModelConfig model;
    vae::TrainConfig train;
    PriorConfig prior;
    HmcStageConfig hmc_stage;
    ReportConfig report;

    static PipelineConfig from_file(const ConfigFile& file) {
        ConfigReader r(file);
        PipelineConfig c;
        c.seed = r.unsigned_int("", "seed", c.seed);
        c.out_dir = r.text("", "out_dir", c.out_dir);

        c.data.grid.m_min = r.number("data", "m_min", c.data.grid.m_min);
        c.data.grid.m_max = r.number("data", "m_max", c.data.grid.m_max);
        c.data.grid.step = r.number("data", "mass_step", c.data.grid.step);
        c.data.f_min = r.number("data", "f_min", c.data.f_min);
        c.data.sample_rate = r.number("data", "sample_rate", c.data.sample_rate);
        c.data.duration = r.number("data", "duration", c.data.duration);
        c.data.amplitude = r.number("data", "amplitude", c.data.amplitude);
        c.data.target_len =
            static_cast<std::size_t>(r.unsigned_int("data", "target_len", c.data.target_len));
        c.data.detectors = parse_detectors(
            r.text("data", "detectors", "H1:1.0:0,L1:0.9:2,V1:0.8:4"));
        c.data.noise.psd_slope = r.number("data", "psd_slope", c.data.noise.psd_slope);
        c.data.noise.psd_scale = r.number("data", "psd_scale", c.data.noise.psd_scale);
        c.data.noise.f_knee = r.number("data", "f_knee", c.data.noise.f_knee);
        c.data.spin1 = r.number("data", "spin1", c.data.spin1);
        c.data.spin2 = r.number("data", "spin2", c.data.spin2);

        c.model.input_len = c.data.target_len;
        c.model.latent_dim =
            static_cast<std::size_t>(r.unsigned_int("model", "latent_dim", c.model.latent_dim));
        c.model.conv_channels = static_cast<std::size_t>(
            r.unsigned_int("model", "conv_channels", c.model.conv_channels));
        c.model.conv_kernel = static_cast<std::size_t>(
            r.unsigned_int("model", "conv_kernel", c.model.conv_kernel));
        c.model.pool = static_cast<std::size_t>(r.unsigned_int("model", "pool", c.model.pool));
        c.model.hidden =
            static_cast<std::size_t>(r.unsigned_int("model", "hidden", c.model.hidden));
        c.model.dropout = r.number("model", "dropout", c.model.dropout);
        c.model.zlogvar_clamp = r.number("model", "zlogvar_clamp", c.model.zlogvar_clamp);
        c.model.input_gain = r.number("model", "input_gain", c.model.input_gain);

        c.train.epochs =
            static_cast<std::size_t>(r.unsigned_int("train", "epochs", c.train.epochs));
        c.train.batch_size =
            static_cast<std::size_t>(r.unsigned_int("train", "batch_size", c.train.batch_size));
        c.train.optimizer.learning_rate =
            r.number("train", "learning_rate", c.train.optimizer.learning_rate);
        c.train.optimizer.clip_norm = r.number("train", "clip_norm", c.train.optimizer.clip_norm);
        c.train.beta.beta_min = r.number("train", "beta_min", c.train.beta.beta_min);
        c.train.beta.beta_max = r.number("train", "beta_max", c.train.beta.beta_max);
        c.train.beta.warmup_epochs = static_cast<std::size_t>(
            r.unsigned_int("train", "warmup_epochs", c.train.beta.warmup_epochs));
        c.train.val_fraction = r.number("train", "val_fraction", c.train.val_fraction);

        c.prior.fit.max_components = static_cast<std::size_t>(
            r.unsigned_int("prior", "max_components", c.prior.fit.max_components));
        c.prior.fit.concentration =
            r.number("prior", "concentration", c.prior.fit.concentration);
        c.prior.fit.max_iters = static_cast<std::size_t>(
            r.unsigned_int("prior", "max_iters", c.prior.fit.max_iters));
        c.prior.fit.tol = r.number("prior", "tol", c.prior.fit.tol);

        c.hmc_stage.sampler.step_size =
            r.number("hmc", "step_size", c.hmc_stage.sampler.step_size);
        c.hmc_stage.sampler.n_leapfrog = static_cast<std::size_t>(
            r.unsigned_int("hmc", "n_leapfrog", c.hmc_stage.sampler.n_leapfrog));
        c.hmc_stage.sampler.n_samples = static_cast<std::size_t>(
            r.unsigned_int("hmc", "n_samples", c.hmc_stage.sampler.n_samples));
        c.hmc_stage.sampler.burn_in = static_cast<std::size_t>(
            r.unsigned_int("hmc", "burn_in", c.hmc_stage.sampler.burn_in));
        c.hmc_stage.sampler.fd_step = r.number("hmc", "fd_step", c.hmc_stage.sampler.fd_step);
        const std::string grad = r.text("hmc", "gradient", "fd");
        require_config(grad == "fd" || grad == "analytic",
                       "[hmc] gradient must be 'fd' or 'analytic'");
        c.hmc_stage.sampler.analytic_grad = grad == "analytic";
        c.hmc_stage.n_chains =
            static_cast<std::size_t>(r.unsigned_int("hmc", "n_chains", c.hmc_stage.n_chains));
        c.hmc_stage.test_target = r.text("hmc", "test_target", c.hmc_stage.test_target);
        require_config(c.hmc_stage.test_target == "none" ||
                           c.hmc_stage.test_target == "std_normal" ||
                           c.hmc_stage.test_target == "bimodal",
                       "[hmc] test_target must be none, std_normal, or bimodal");

        c.report.bins =
            static_cast<std::size_t>(r.unsigned_int("report", "bins", c.report.bins));
        c.report.null_samples = static_cast<std::size_t>(
            r.unsigned_int("report", "null_samples", c.report.null_samples));
        c.report.self_comparison =
            r.boolean("report", "self_comparison", c.report.self_comparison);

        r.reject_unknown();
        c.validate();
        return c;
    }

    static PipelineConfig load(const std::string& path) {
        return from_file(ConfigFile::parse_file(path));
    }

    void validate() const {
        require_config(data.target_len >= 4, "[data] target_len must be >= 4");
        require_config(data.duration > 0.0, "[data] duration must be > 0");
        require_config(!out_dir.empty(), "out_dir must not be empty");
        require_config(hmc_stage.n_chains >= 1, "[hmc] n_chains must be >= 1");
        require_config(report.bins >= 1, "[report] bins must be >= 1");
        require_config(report.null_samples >= 10, "[report] null_samples must be >= 10");
        model.validate();
        train.validate();
        prior.fit.validate();
        hmc_stage.sampler.validate();
    }

    static std::vector<signalgen::DetectorProfile> parse_detectors(const std::string& text) {
        std::vector<signalgen::DetectorProfile> out;
        for (const auto& item : split_fields(text, ',')) {
            const auto fields = split_fields(ConfigFile::trim(item), ':');
            require_config(fields.size() == 3,
                           "[data] detectors entries must look like ID:gain:delay");
            signalgen::DetectorProfile p;
            p.id = ConfigFile::trim(fields[0]);
            p.gain = parse_double(ConfigFile::trim(fields[1]), "[data] detectors gain");
            p.delay = static_cast<std::size_t>(
                parse_double(ConfigFile::trim(fields[2]), "[data] detectors delay"));
            out.push_back(p);
        }
        require_config(!out.empty(), "[data] detectors must not be empty");
        return out;
    }

    // Effective values of every key, defaults included; recorded in the manifest.
    std::map<std::string, std::map<std::string, std::string>> snapshot() const {
        std::map<std::string, std::map<std::string, std::string>> s;
        s[""]["seed"] = std::to_string(seed);
        s[""]["out_dir"] = out_dir;
        auto& d = s["data"];
        d["m_min"] = format_double(data.grid.m_min);
        d["m_max"] = format_double(data.grid.m_max);
        d["mass_step"] = format_double(data.grid.step);
        d["f_min"] = format_double(data.f_min);
        d["sample_rate"] = format_double(data.sample_rate);
        d["duration"] = format_double(data.duration);
        d["amplitude"] = format_double(data.amplitude);
        d["target_len"] = std::to_string(data.target_len);
        std::string det;
        for (const auto& p : data.detectors) {
            if (!det.empty()) det += ',';
            det += p.id + ":" + format_double(p.gain) + ":" + std::to_string(p.delay);
        }
        d["detectors"] = det;
        d["psd_slope"] = format_double(data.noise.psd_slope);
        d["psd_scale"] = format_double(data.noise.psd_scale);
        d["f_knee"] = format_double(data.noise.f_knee);
        d["spin1"] = format_double(data.spin1);
        d["spin2"] = format_double(data.spin2);
        auto& m = s["model"];
        m["latent_dim"] = std::to_string(model.latent_dim);
        m["conv_channels"] = std::to_string(model.conv_channels);
        m["conv_kernel"] = std::to_string(model.conv_kernel);
        m["pool"] = std::to_string(model.pool);
        m["hidden"] = std::to_string(model.hidden);
        m["dropout"] = format_double(model.dropout);
        m["zlogvar_clamp"] = format_double(model.zlogvar_clamp);
        m["input_gain"] = format_double(model.input_gain);
        auto& t = s["train"];
        t["epochs"] = std::to_string(train.epochs);
        t["batch_size"] = std::to_string(train.batch_size);
        t["learning_rate"] = format_double(train.optimizer.learning_rate);
        t["clip_norm"] = format_double(train.optimizer.clip_norm);
        t["beta_min"] = format_double(train.beta.beta_min);
        t["beta_max"] = format_double(train.beta.beta_max);
        t["warmup_epochs"] = std::to_string(train.beta.warmup_epochs);
        t["val_fraction"] = format_double(train.val_fraction);
        auto& p = s["prior"];
        p["max_components"] = std::to_string(prior.fit.max_components);
        p["concentration"] = format_double(prior.fit.concentration);
        p["max_iters"] = std::to_string(prior.fit.max_iters);
        p["tol"] = format_double(prior.fit.tol);
        auto& h = s["hmc"];
        h["step_size"] = format_double(hmc_stage.sampler.step_size);
        h["n_leapfrog"] = std::to_string(hmc_stage.sampler.n_leapfrog);
        h["n_samples"] = std::to_string(hmc_stage.sampler.n_samples);
        h["burn_in"] = std::to_string(hmc_stage.sampler.burn_in);
        h["fd_step"] = format_double(hmc_stage.sampler.fd_step);
        h["gradient"] = hmc_stage.sampler.analytic_grad ? "analytic" : "fd";
        h["n_chains"] = std::to_string(hmc_stage.n_chains);
        h["test_target"] = hmc_stage.test_target;
        auto& rep = s["report"];
        rep["bins"] = std::to_string(report.bins);
        rep["null_samples"] = std::to_string(report.null_samples);
        rep["self_comparison"] = report.self_comparison ? "true" : "false";
        return s;
    }
};

struct Paths {
    fs::path root;
    explicit Paths(const PipelineConfig& cfg) : root(cfg.out_dir) {}
    fs::path noisy() const { return root / "noisy.csv"; }
    fs::path clean() const { return root / "clean.csv"; }
    fs::path meta() const { return root / "meta.csv"; }
    fs::path weights() const { return root / "weights.lsnn"; }
    fs::path train_report() const { return root / "train_report.csv"; }
    fs::path mixture_csv() const { return root / "mixture.csv"; }
    fs::path latents_clean() const { return root / "latents_clean.csv"; }
    fs::path latents_noisy() const { return root / "latents_noisy.csv"; }
    fs::path posterior() const { return root / "posterior_samples.csv"; }
    fs::path acceptance() const { return root / "acceptance_rates.csv"; }
    fs::path ks_report_csv() const { return root / "ks_report.csv"; }
    fs::path ks_null_csv() const { return root / "ks_null.csv"; }
    fs::path corr_csv() const { return root / "corr_matrix.csv"; }
    fs::path summary() const { return root / "summary.txt"; }
    fs::path figures() const { return root / "figures"; }
    fs::path manifest() const { return root / "manifest.json"; }
};

inline void require_artifact(const fs::path& p, const std::string& stage) {
    require_config(fs::exists(p),
                   stage + " requires " + p.string() + "; run the earlier stages first");
}

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

// manifest.json records the effective config and, per stage, a timestamp and
// FNV-1a hash per artifact. Re-running a stage on unchanged inputs must
// reproduce the same hashes.
inline void record_stage(const PipelineConfig& cfg, const std::string& stage,
                         const std::vector<fs::path>& artifacts) {
    const Paths paths(cfg);
    nlohmann::json doc;
    if (fs::exists(paths.manifest())) {
        std::ifstream in(paths.manifest());
        try {
            in >> doc;
        } catch (const nlohmann::json::exception&) {
            doc = nlohmann::json::object();
        }
    }
    doc["config"] = cfg.snapshot();
    auto& entry = doc["stages"][stage];
    entry["completed_at"] = iso_timestamp();
    entry["artifacts"] = nlohmann::json::object();
    for (const auto& a : artifacts) {
        char hex[20];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(hash_file(a.string())));
        entry["artifacts"][fs::relative(a, paths.root).string()] = hex;
    }
    std::ofstream out(paths.manifest(), std::ios::binary);
    out << doc.dump(2) << '\n';
    require_config(out.good(), "cannot write manifest: " + paths.manifest().string());
}

inline signalgen::ChirpParams base_chirp(const PipelineConfig& cfg) {
    signalgen::ChirpParams p;
    p.f_min = cfg.data.f_min;
    p.sample_rate = cfg.data.sample_rate;
    p.amplitude = cfg.data.amplitude;
    return p;
}

inline void cmd_gen_data(const PipelineConfig& cfg) {
    const Paths paths(cfg);
    fs::create_directories(paths.root);
    signalgen::NoiseSpec noise = cfg.data.noise;
    const auto dataset =
        signalgen::build_dataset(cfg.data.grid, cfg.data.detectors, base_chirp(cfg),
                                 cfg.data.duration, noise, cfg.data.target_len, cfg.seed);
    write_csv_matrix(paths.noisy().string(), dataset.noisy);
    write_csv_matrix(paths.clean().string(), dataset.clean);
    std::vector<std::vector<std::string>> meta_rows;
    meta_rows.reserve(dataset.meta.size());
    for (const auto& m : dataset.meta)
        meta_rows.push_back({std::to_string(m.row), format_double(m.m1), format_double(m.m2),
                             m.detector});
    write_csv_table(paths.meta().string(), {"row", "m1", "m2", "detector"}, meta_rows);
    record_stage(cfg, "gen-data", {paths.noisy(), paths.clean(), paths.meta()});
    std::cout << "gen-data: " << dataset.noisy.size() << " rows of length "
              << cfg.data.target_len << "\n";
}

inline void cmd_train(const PipelineConfig& cfg) {
    const Paths paths(cfg);
    require_artifact(paths.noisy(), "train");
    require_artifact(paths.clean(), "train");
    const auto noisy = read_csv_matrix(paths.noisy().string());
    const auto clean = read_csv_matrix(paths.clean().string());
    require_config(noisy.size() == clean.size(), "noisy/clean row counts differ");
    require_config(noisy.front().size() == cfg.model.input_len,
                   "dataset length does not match [data] target_len");

    vae::VaeModel model = vae::VaeModel::init(cfg.model, cfg.seed);
    vae::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    const vae::TrainReport report = vae::train(model, noisy, clean, tc);

    nn::save_tensors(paths.weights().string(), vae::to_tensors(model));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        const auto& s = report.epochs[e];
        rows.push_back({std::to_string(e), format_double(s.recon), format_double(s.kl),
                        format_double(s.beta), format_double(s.total)});
    }
    write_csv_table(paths.train_report().string(), {"epoch", "recon", "kl", "beta", "total"},
                    rows);
    fs::create_directories(paths.figures());
    svg::Series recon{"reconstruction", {}}, kl{"kl", {}}, total{"total", {}};
    for (const auto& s : report.epochs) {
        recon.y.push_back(s.recon);
        kl.y.push_back(s.kl);
        total.y.push_back(s.total);
    }
    const fs::path loss_fig = paths.figures() / "loss_curves.svg";
    svg::write_line_chart(loss_fig.string(), {recon, kl, total}, "Training losses", "epoch",
                          "loss");
    record_stage(cfg, "train", {paths.weights(), paths.train_report(), loss_fig});
    std::cout << "train: final recon " << format_double(report.epochs.back().recon)
              << " after " << report.epochs.size() << " epochs\n";
}

inline std::vector<std::vector<double>> encode_rows(
    const vae::VaeModel& model, const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<double>> out(rows.size());
    parallel_for(rows.size(), [&](std::size_t i) { out[i] = model.encode(rows[i]).first; });
    return out;
}

inline std::vector<mixture::MixtureModel> load_mixtures(const std::string& path) {
    std::vector<std::string> header;
    const auto rows = read_csv_table(path, &header);
    require_config(header == std::vector<std::string>({"dim", "k", "weight", "mean", "variance"}),
                   "unexpected mixture.csv header in " + path);
    std::map<std::size_t, mixture::MixtureModel> by_dim;
    for (const auto& row : rows) {
        require_config(row.size() == 5, "malformed mixture.csv row");
        const auto dim = static_cast<std::size_t>(parse_double(row[0], path));
        auto& m = by_dim[dim];
        m.weights.push_back(parse_double(row[2], path));
        m.means.push_back(parse_double(row[3], path));
        m.variances.push_back(parse_double(row[4], path));
    }
    std::vector<mixture::MixtureModel> out;
    for (auto& [dim, m] : by_dim) {
        require_config(dim == out.size(), "mixture.csv dimensions are not contiguous");
        m.validate();
        out.push_back(std::move(m));
    }
    return out;
}

inline void cmd_fit_prior(const PipelineConfig& cfg) {
    const Paths paths(cfg);
    require_artifact(paths.weights(), "fit-prior");
    require_artifact(paths.noisy(), "fit-prior");
    require_artifact(paths.clean(), "fit-prior");
    const vae::VaeModel model = vae::from_tensors(nn::load_tensors(paths.weights().string()));
    const auto noisy = read_csv_matrix(paths.noisy().string());
    const auto clean = read_csv_matrix(paths.clean().string());

    const auto z_clean = encode_rows(model, clean);
    const auto z_noisy = encode_rows(model, noisy);
    write_csv_matrix(paths.latents_clean().string(), z_clean);
    write_csv_matrix(paths.latents_noisy().string(), z_noisy);

    const std::size_t dims = model.cfg.latent_dim;
    std::vector<mixture::MixtureModel> fits(dims);
    parallel_for(dims, [&](std::size_t d) {
        std::vector<double> column(z_clean.size());
        for (std::size_t i = 0; i < column.size(); ++i) column[i] = z_clean[i][d];
        mixture::FitConfig fit_cfg = cfg.prior.fit;
        fit_cfg.seed = derive_seed(cfg.seed, streams::prior, d);
        fits[d] = mixture::fit(column, fit_cfg);
    });

    std::vector<std::vector<std::string>> rows;
    for (std::size_t d = 0; d < dims; ++d)
        for (std::size_t k = 0; k < fits[d].size(); ++k)
            rows.push_back({std::to_string(d), std::to_string(k),
                            format_double(fits[d].weights[k]), format_double(fits[d].means[k]),
                            format_double(fits[d].variances[k])});
    write_csv_table(paths.mixture_csv().string(), {"dim", "k", "weight", "mean", "variance"},
                    rows);

    fs::create_directories(paths.figures());
    std::vector<fs::path> artifacts = {paths.mixture_csv(), paths.latents_clean(),
                                       paths.latents_noisy()};
    for (std::size_t d = 0; d < dims; ++d) {
        std::vector<double> column(z_clean.size());
        for (std::size_t i = 0; i < column.size(); ++i) column[i] = z_clean[i][d];
        const auto hist = mixture::histogram_pdf(column, cfg.report.bins);
        const double lo = hist.edges.front();
        const double hi = hist.edges.back();
        std::vector<svg::DensityCurve> curves;
        svg::DensityCurve overall;
        const std::size_t pts = 200;
        for (std::size_t i = 0; i < pts; ++i) {
            const double x = lo + (hi - lo) * static_cast<double>(i) /
                                      static_cast<double>(pts - 1);
            overall.x.push_back(x);
            overall.y.push_back(std::exp(mixture::log_density(fits[d], x)));
        }
        curves.push_back(overall);
        for (std::size_t k = 0; k < fits[d].size(); ++k) {
            svg::DensityCurve comp;
            comp.dashed = true;
            for (std::size_t i = 0; i < pts; ++i) {
                const double x = lo + (hi - lo) * static_cast<double>(i) /
                                          static_cast<double>(pts - 1);
                comp.x.push_back(x);
                comp.y.push_back(fits[d].weights[k] *
                                 std::exp(mixture::gaussian_logpdf(x, fits[d].means[k],
                                                                   fits[d].variances[k])));
            }
            curves.push_back(comp);
        }
        char name[48];
        std::snprintf(name, sizeof name, "density_dim_%02zu.svg", d);
        const fs::path fig = paths.figures() / name;
        svg::write_density_overlay(fig.string(), hist.edges, hist.heights, curves,
                                   "Latent dimension " + std::to_string(d));
        artifacts.push_back(fig);
    }
    record_stage(cfg, "fit-prior", artifacts);
    std::cout << "fit-prior: fitted " << dims << " per-dimension mixtures\n";
}

inline mixture::MixtureModel builtin_target(const std::string& name) {
    if (name == "std_normal") return mixture::MixtureModel{{1.0}, {0.0}, {1.0}};
    return mixture::MixtureModel{{0.5, 0.5}, {-2.0, 2.0}, {0.25, 0.25}};
}

inline void cmd_sample(const PipelineConfig& cfg) {
    const Paths paths(cfg);
    std::vector<mixture::MixtureModel> models;
    std::vector<std::vector<double>> inits;
    if (cfg.hmc_stage.test_target == "none") {
        require_artifact(paths.mixture_csv(), "sample");
        require_artifact(paths.latents_clean(), "sample");
        models = load_mixtures(paths.mixture_csv().string());
        const auto latents = read_csv_matrix(paths.latents_clean().string());
        require_config(latents.front().size() == models.size(),
                       "latent dimension count does not match mixture.csv");
        const std::size_t chains = std::min<std::size_t>(cfg.hmc_stage.n_chains, latents.size());
        for (std::size_t c = 0; c < chains; ++c)
            inits.push_back(latents[c * latents.size() / chains]);
    } else {
        // Built-in reference target: chains start at i.i.d. oracle draws.
        models.push_back(builtin_target(cfg.hmc_stage.test_target));
        const auto draws = mixture::sample(models[0], cfg.hmc_stage.n_chains,
                                           derive_seed(cfg.seed, streams::hmc, 0xbeef));
        for (double q : draws) inits.push_back({q});
    }

    hmc::HmcConfig sampler = cfg.hmc_stage.sampler;
    sampler.seed = cfg.seed;
    const auto results = hmc::run_all_dimensions(inits, models, sampler);

    const std::size_t dims = results.size();
    const std::size_t kept = results.front().positions.size();
    std::vector<std::vector<double>> samples(kept, std::vector<double>(dims));
    for (std::size_t d = 0; d < dims; ++d)
        for (std::size_t i = 0; i < kept; ++i) samples[i][d] = results[d].positions[i];
    write_csv_matrix(paths.posterior().string(), samples);

    std::vector<std::vector<std::string>> rate_rows;
    std::vector<double> rates;
    for (const auto& r : results) {
        rate_rows.push_back({std::to_string(r.dimension), format_double(r.acceptance_rate),
                             std::to_string(r.n_proposals)});
        rates.push_back(r.acceptance_rate);
        if (r.acceptance_rate == 0.0)
            std::cerr << "warning: dimension " << r.dimension
                      << " rejected every proposal; check [hmc] step_size\n";
    }
    write_csv_table(paths.acceptance().string(), {"dim", "rate", "n_proposals"}, rate_rows);
    fs::create_directories(paths.figures());
    const fs::path fig = paths.figures() / "acceptance_rates.svg";
    svg::write_bar_chart(fig.string(), rates, "HMC acceptance rate per latent dimension",
                         "latent dimension", "acceptance rate", true);
    record_stage(cfg, "sample", {paths.posterior(), paths.acceptance(), fig});
    std::cout << "sample: " << kept << " posterior samples per dimension across " << dims
              << " dimensions\n";
}

inline void cmd_diagnose(const PipelineConfig& cfg) {
    const Paths paths(cfg);
    require_artifact(paths.posterior(), "diagnose");
    require_artifact(paths.latents_noisy(), "diagnose");
    require_artifact(paths.mixture_csv(), "diagnose");
    const auto posterior = read_csv_matrix(paths.posterior().string());
    const auto z_noisy = read_csv_matrix(paths.latents_noisy().string());
    const auto models = load_mixtures(paths.mixture_csv().string());

    const auto& compare = cfg.report.self_comparison ? z_noisy : posterior;
    const auto ks = stats::ks_report(z_noisy, compare);
    std::vector<std::vector<std::string>> ks_rows;
    std::vector<double> ks_values;
    for (std::size_t d = 0; d < ks.size(); ++d) {
        ks_rows.push_back({std::to_string(d), format_double(ks[d].statistic),
                           format_double(ks[d].p_value), std::to_string(ks[d].n1),
                           std::to_string(ks[d].n2)});
        ks_values.push_back(ks[d].statistic);
    }
    write_csv_table(paths.ks_report_csv().string(), {"dim", "D", "p", "n1", "n2"}, ks_rows);

    // Null control: two fresh i.i.d. draws from each fitted mixture. The KS
    // scale of a genuinely shared distribution anchors the report.
    std::vector<std::vector<std::string>> null_rows;
    std::vector<double> null_values(models.size());
    parallel_for(models.size(), [&](std::size_t d) {
        const auto a = mixture::sample(models[d], cfg.report.null_samples,
                                       derive_seed(cfg.seed, streams::null_control, d, 0));
        const auto b = mixture::sample(models[d], cfg.report.null_samples,
                                       derive_seed(cfg.seed, streams::null_control, d, 1));
        null_values[d] = stats::ks_two_sample(a, b).statistic;
    });
    for (std::size_t d = 0; d < models.size(); ++d) {
        const double n = static_cast<double>(cfg.report.null_samples);
        const double p = stats::kolmogorov_survival(std::sqrt(n / 2.0) * null_values[d]);
        null_rows.push_back({std::to_string(d), format_double(null_values[d]),
                             format_double(p), std::to_string(cfg.report.null_samples),
                             std::to_string(cfg.report.null_samples)});
    }
    write_csv_table(paths.ks_null_csv().string(), {"dim", "D", "p", "n1", "n2"}, null_rows);

    const auto corr = stats::pearson_matrix(z_noisy);
    write_csv_matrix(paths.corr_csv().string(), corr.coeff);
    for (std::size_t d : corr.degenerate_dims)
        std::cerr << "warning: latent dimension " << d
                  << " has zero variance; correlations reported as 0\n";

    fs::create_directories(paths.figures());
    const fs::path ks_fig = paths.figures() / "ks_statistics.svg";
    svg::write_bar_chart(ks_fig.string(), ks_values, "KS statistic per latent dimension",
                         "latent dimension", "KS D", true);
    const fs::path corr_fig = paths.figures() / "corr_heatmap.svg";
    svg::write_heatmap(corr_fig.string(), corr.coeff, "Latent Pearson correlation");

    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    const double median_d = median_of(ks_values);
    const double max_d = *std::max_element(ks_values.begin(), ks_values.end());
    const double median_null = median_of(null_values);
    std::ofstream summary(paths.summary(), std::ios::binary);
    summary << "latent dimensions: " << ks_values.size() << "\n"
            << "median KS D (encoder vs posterior): " << format_double(median_d) << "\n"
            << "max KS D (encoder vs posterior): " << format_double(max_d) << "\n"
            << "median KS D (same-distribution null control): " << format_double(median_null)
            << "\n"
            << "zero-variance latent dimensions: " << corr.degenerate_dims.size() << "\n";
    summary.close();

    record_stage(cfg, "diagnose",
                 {paths.ks_report_csv(), paths.ks_null_csv(), paths.corr_csv(), ks_fig,
                  corr_fig, paths.summary()});
    std::cout << "diagnose: median D " << format_double(median_d) << ", max D "
              << format_double(max_d) << ", null median D " << format_double(median_null)
              << "\n";
}

inline void cmd_all(const PipelineConfig& cfg) {
    cmd_gen_data(cfg);
    cmd_train(cfg);
    cmd_fit_prior(cfg);
    cmd_sample(cfg);
    cmd_diagnose(cfg);
}

}  // namespace latentscope::pipeline
