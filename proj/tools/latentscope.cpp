#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "latentscope/pipeline.hpp"

namespace {

using latentscope::pipeline::PipelineConfig;

int run_stage(const std::string& stage, const std::string& config_path,
              const std::optional<std::string>& out_dir,
              const std::optional<std::uint64_t>& seed) {
    PipelineConfig cfg = PipelineConfig::load(config_path);
    if (out_dir) cfg.out_dir = *out_dir;
    if (seed) cfg.seed = *seed;
    cfg.validate();
    using namespace latentscope::pipeline;
    if (stage == "gen-data")
        cmd_gen_data(cfg);
    else if (stage == "train")
        cmd_train(cfg);
    else if (stage == "fit-prior")
        cmd_fit_prior(cfg);
    else if (stage == "sample")
        cmd_sample(cfg);
    else if (stage == "diagnose")
        cmd_diagnose(cfg);
    else
        cmd_all(cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latentscope: chirp dataset -> denoising VAE -> per-dimension "
                 "mixture fit -> HMC posterior sampling -> latent diagnostics"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::string stage;
    for (const char* name :
         {"gen-data", "train", "fit-prior", "sample", "diagnose", "all"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "pipeline config file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides out_dir)");
        sub->add_option("--seed", seed, "global seed (overrides seed)");
        sub->callback([&stage, name] { stage = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return run_stage(stage, config_path, out_dir, seed);
    } catch (const latentscope::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const latentscope::numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
