// Command-line front end: synth, extract, eval.
#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "pitchcov/pitchcov.hpp"

namespace {

// Assigns `value` to `target` only when the flag was given, so flags override the config file.
template <class T>
void override_if(const CLI::Option* opt, T& target, const T& value) {
    if (opt->count() > 0) target = value;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pitchcov: predict pitch from MFCCs on synthetic and recorded corpora"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t jobs = 1;
    app.add_option("--config", config_path, "JSON config; flags override its values")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "master seed");
    auto* out_opt = app.add_option("--out", out, "output directory");
    auto* jobs_opt = app.add_option("--jobs", jobs, "worker threads (results do not depend on it)");
    app.fallthrough();

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus of WAV files");
    std::string mechanism;
    std::size_t n = 0;
    double duration = 0.0;
    auto* mech_opt = synth->add_option("--mechanism", mechanism, "sinusoidal | complicated");
    auto* n_opt = synth->add_option("--n", n, "number of utterances");
    auto* dur_opt = synth->add_option("--duration", duration, "utterance length in seconds");

    auto* extract = app.add_subcommand("extract", "compute MFCC and F0 CSVs for every WAV in a directory");
    std::string corpus;
    extract->add_option("--corpus", corpus, "directory of .wav files")->required();

    auto* eval = app.add_subcommand("eval", "fit and score MFCC-to-pitch regressors");
    std::string train, test, fractions, unit;
    std::vector<std::string> matrix;
    std::size_t runs = 0, context_k = 0;
    double split = 0.0, alpha = 0.0;
    bool ablation = false, percoeff = false, traces = false;
    auto* train_opt = eval->add_option("--train", train, "training corpus (features dir or corpus dir)");
    auto* test_opt = eval->add_option("--test", test, "test corpus; defaults to --train");
    auto* matrix_opt = eval->add_option("--matrix", matrix, "corpora for the cross train/test matrix");
    auto* runs_opt = eval->add_option("--runs", runs, "random splits per cell");
    auto* split_opt = eval->add_option("--split", split, "training share of utterances");
    auto* k_opt = eval->add_option("--context-k", context_k, "neighbouring frames stacked on each side");
    auto* alpha_opt = eval->add_option("--alpha", alpha, "significance level");
    auto* abl_opt = eval->add_flag("--ablation", ablation, "training-size ablation on --train");
    auto* frac_opt = eval->add_option("--fractions", fractions, "lo:hi:step or comma list");
    auto* unit_opt = eval->add_option("--ablation-unit", unit, "utterances | frames");
    auto* pc_opt = eval->add_flag("--percoeff", percoeff, "per-coefficient correlation with pitch");
    auto* tr_opt = eval->add_flag("--traces", traces, "write gold/predicted contours per test utterance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        pitchcov::RunConfig cfg = config_path.empty() ? pitchcov::RunConfig{} : pitchcov::load_config(config_path);
        override_if(seed_opt, cfg.seed, seed);
        override_if(out_opt, cfg.out, out);
        override_if(jobs_opt, cfg.jobs, jobs);
        if (cfg.jobs == 0) cfg.jobs = pitchcov::default_jobs();

        if (synth->parsed()) {
            override_if(mech_opt, cfg.synth.mechanism, mechanism);
            override_if(n_opt, cfg.synth.n, n);
            override_if(dur_opt, cfg.synth.duration_s, duration);
            pitchcov::cmd_synth(cfg);
        } else if (extract->parsed()) {
            cfg.corpus = corpus;
            pitchcov::cmd_extract(cfg);
        } else {
            override_if(train_opt, cfg.eval.train, train);
            override_if(test_opt, cfg.eval.test, test);
            override_if(matrix_opt, cfg.eval.matrix, matrix);
            override_if(runs_opt, cfg.runs, runs);
            override_if(split_opt, cfg.split, split);
            override_if(k_opt, cfg.context_k, context_k);
            override_if(alpha_opt, cfg.eval.alpha, alpha);
            override_if(abl_opt, cfg.eval.ablation, ablation);
            override_if(unit_opt, cfg.eval.ablation_unit, unit);
            override_if(pc_opt, cfg.eval.percoeff, percoeff);
            override_if(tr_opt, cfg.eval.traces, traces);
            if (frac_opt->count() > 0) cfg.eval.fractions = pitchcov::parse_fractions(fractions);
            pitchcov::cmd_eval(cfg);
        }
    } catch (const pitchcov::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
