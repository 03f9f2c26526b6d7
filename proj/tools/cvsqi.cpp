// Command-line front end: gen, stream, preprocess, split, train,
// train-manifold, threshold, evaluate, assess, bench.
// Exit codes: 0 success, 2 validation error, 3 I/O error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvsqi/errors.hpp"
#include "cvsqi/pipeline.hpp"

using namespace cvsqi;
namespace fs = std::filesystem;

namespace {

pipeline::DatasetRecipe recipe_or_default(const std::string& path) {
    if (path.empty()) return {};
    return pipeline::recipe_from_json(io::read_file(path));
}

std::vector<prep::NormalizedCycle> read_many(const std::vector<std::string>& paths) {
    std::vector<prep::NormalizedCycle> out;
    for (const auto& p : paths) {
        auto part = io::read_normalized(p);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") std::cout << text;
    else io::write_atomic(path, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-cycle quality assessment for EIT cardiac volume signals"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "pipeline config JSON (default: $CVSQI_CONFIG)");

    // gen
    auto* gen = app.add_subcommand("gen", "synthesize a labelled cycle dataset");
    std::string gen_recipe, gen_out;
    std::optional<std::uint64_t> gen_seed;
    gen->add_option("--recipe", gen_recipe, "dataset recipe JSON");
    gen->add_option("--seed", gen_seed, "override the recipe seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    // stream
    auto* stream = app.add_subcommand("stream", "synthesize one subject's CVS stream with R-peaks");
    std::string st_recipe, st_out;
    std::optional<std::uint64_t> st_seed;
    std::size_t st_subject = 0;
    bool st_motion_free = false, st_with_g = false;
    stream->add_option("--recipe", st_recipe, "dataset recipe JSON");
    stream->add_option("--seed", st_seed, "override the recipe seed");
    stream->add_option("--subject", st_subject, "subject index within the recipe");
    stream->add_flag("--motion-free", st_motion_free, "drop all motion events");
    stream->add_flag("--with-g", st_with_g, "append the 208 transconductance channels");
    stream->add_option("--out", st_out, "stream CSV")->required();

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "scale and size-normalize raw cycles");
    std::string pre_cycles, pre_calib, pre_out, pre_norm, pre_scale;
    pre->add_option("--cycles", pre_cycles, "raw cycles CSV")->required();
    pre->add_option("--calib", pre_calib, "calibration windows CSV");
    pre->add_option("--norm", pre_norm, "interp | pad");
    pre->add_option("--scale", pre_scale, "subject | naive | none");
    pre->add_option("--out", pre_out, "normalized dataset CSV")->required();

    // split
    auto* split = app.add_subcommand("split", "subject-disjoint train/val/test split");
    std::string sp_data, sp_out;
    std::optional<std::uint64_t> sp_seed;
    split->add_option("--data", sp_data, "normalized dataset CSV")->required();
    split->add_option("--seed", sp_seed, "split seed");
    split->add_option("--out-dir", sp_out, "writes train/val/test and *_pos CSVs")->required();

    // train
    auto* train = app.add_subcommand("train", "train a discriminative model");
    std::string tr_arch, tr_norm, tr_scale, tr_train, tr_val, tr_out;
    std::optional<std::size_t> tr_epochs, tr_batch;
    std::optional<double> tr_lr;
    std::optional<std::uint64_t> tr_seed;
    train->add_option("--arch", tr_arch, "lr | mlp1 | mlp2 | vgg3 | vgg4 | vgg5")->required();
    train->add_option("--norm", tr_norm, "interp | pad");
    train->add_option("--scale", tr_scale, "scale mode the data was prepared with");
    train->add_option("--train", tr_train, "training CSV")->required();
    train->add_option("--val", tr_val, "validation CSV")->required();
    train->add_option("--epochs", tr_epochs);
    train->add_option("--lr", tr_lr);
    train->add_option("--batch", tr_batch);
    train->add_option("--seed", tr_seed);
    train->add_option("--out", tr_out, "model JSON")->required();

    // train-manifold
    auto* trm = app.add_subcommand("train-manifold", "fit PCA or a VAE on normal cycles");
    std::string tm_kind, tm_norm, tm_scale, tm_pos, tm_pos_val, tm_out;
    std::vector<std::string> tm_calib;
    std::optional<double> tm_beta, tm_lr;
    std::optional<std::size_t> tm_epochs, tm_batch;
    std::optional<std::uint64_t> tm_seed;
    trm->add_option("--kind", tm_kind, "pca | vae | bvae | cvae | bcvae")->required();
    trm->add_option("--beta", tm_beta, "KL weight (default per kind)");
    trm->add_option("--norm", tm_norm, "interp | pad");
    trm->add_option("--scale", tm_scale, "scale mode the data was prepared with");
    trm->add_option("--pos-train", tm_pos, "normal-only training CSV")->required();
    trm->add_option("--pos-val", tm_pos_val, "normal-only validation CSV (default: --pos-train)");
    trm->add_option("--calib", tm_calib, "labelled CSVs for the residual threshold");
    trm->add_option("--epochs", tm_epochs);
    trm->add_option("--lr", tm_lr);
    trm->add_option("--batch", tm_batch);
    trm->add_option("--seed", tm_seed);
    trm->add_option("--out", tm_out, "model JSON")->required();

    // threshold
    auto* thr = app.add_subcommand("threshold", "choose the residual threshold of a manifold model");
    std::string th_model;
    std::vector<std::string> th_scored;
    thr->add_option("--model", th_model, "model JSON (updated in place)")->required();
    thr->add_option("--scored", th_scored, "labelled CSVs (train + val)")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "metrics table on a labelled test set");
    std::vector<std::string> ev_models;
    std::string ev_test, ev_json;
    ev->add_option("--model", ev_models, "model JSON files")->required();
    ev->add_option("--test", ev_test, "labelled CSV")->required();
    ev->add_option("--json", ev_json, "also write machine-readable records here");

    // assess
    auto* as = app.add_subcommand("assess", "per-cycle verdicts for a CVS stream");
    std::string as_model, as_stream, as_norm, as_out;
    as->add_option("--model", as_model, "model JSON")->required();
    as->add_option("--stream", as_stream, "stream CSV with R-peak flags")->required();
    as->add_option("--norm", as_norm, "expected size scheme");
    as->add_option("--out", as_out, "verdict CSV (default stdout)");

    // bench
    auto* bench = app.add_subcommand("bench", "per-cycle inference latency");
    std::vector<std::string> be_models;
    std::size_t be_cycles = 1000;
    std::uint64_t be_seed = 0;
    bench->add_option("--model", be_models, "model JSON files")->required();
    bench->add_option("--cycles", be_cycles, "timed cycles per model (>= 1000)");
    bench->add_option("--seed", be_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const pipeline::PipelineConfig cfg =
            pipeline::load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));
        const prep::SizeScheme default_scheme = cfg.scheme;
        auto scheme_of = [&](const std::string& s) { return s.empty() ? default_scheme : prep::size_scheme_from(s); };
        auto scale_of = [&](const std::string& s) { return s.empty() ? cfg.scale : prep::scale_mode_from(s); };

        if (*gen) {
            auto r = recipe_or_default(gen_recipe);
            if (gen_seed) r.seed = *gen_seed;
            std::cout << pipeline::cmd_gen(r, gen_out) << "\n";
        } else if (*stream) {
            auto r = recipe_or_default(st_recipe);
            if (st_seed) r.seed = *st_seed;
            auto sc = pipeline::subject_scenario(r, st_subject);
            if (st_motion_free) sc.motion_events.clear();
            const auto s = eit::synthesize_stream(sc, {st_with_g});
            io::write_stream(st_out, pipeline::to_stream(s, st_with_g));
            std::cout << "stream " << s.subject_id << ": " << s.t_ms.size() << " samples, "
                      << s.r_peaks_ms.size() << " R-peaks\n";
        } else if (*pre) {
            const auto mode = scale_of(pre_scale);
            const auto cycles = io::read_raw_cycles(pre_cycles);
            std::vector<prep::CalibrationWindow> calib;
            if (!pre_calib.empty()) calib = io::read_calibration(pre_calib);
            const auto norm = pipeline::normalize_dataset(cycles, calib, mode, scheme_of(pre_norm));
            io::write_normalized(pre_out, norm);
            std::cout << pipeline::format_class_counts(pipeline::class_counts(norm)) << "\n";
        } else if (*split) {
            const auto data = io::read_normalized(sp_data);
            const auto sets = pipeline::split_dataset(data, sp_seed.value_or(cfg.split_seed));
            fs::create_directories(sp_out);
            const fs::path dir(sp_out);
            io::write_normalized(dir / "train.csv", sets.train);
            io::write_normalized(dir / "val.csv", sets.val);
            io::write_normalized(dir / "test.csv", sets.test);
            io::write_normalized(dir / "train_pos.csv", pipeline::positives(sets.train));
            io::write_normalized(dir / "val_pos.csv", pipeline::positives(sets.val));
            const double n = static_cast<double>(data.size());
            std::printf("train %zu (%.3f), val %zu (%.3f), test %zu (%.3f)\n", sets.train.size(),
                        sets.train.size() / n, sets.val.size(), sets.val.size() / n, sets.test.size(),
                        sets.test.size() / n);
        } else if (*train) {
            disc::TrainConfig tc = cfg.discriminative;
            if (tr_epochs) tc.epochs = *tr_epochs;
            if (tr_lr) tc.lr = *tr_lr;
            if (tr_batch) tc.batch = *tr_batch;
            if (tr_seed) tc.seed = *tr_seed;
            const auto arch = disc::architecture_from(tr_arch);
            const auto tr = io::read_normalized(tr_train);
            const auto va = io::read_normalized(tr_val);
            disc::TrainReport rep;
            const auto a = pipeline::train_discriminative(arch, tr, va, tc,
                                                          scheme_of(tr_norm), scale_of(tr_scale), &rep);
            for (std::size_t e = 0; e < rep.train_loss.size(); ++e)
                std::printf("epoch %zu  train %.6f  val %.6f%s\n", e + 1, rep.train_loss[e], rep.val_loss[e],
                            rep.val_auc.empty() ? "" : ("  auc " + std::to_string(rep.val_auc[e])).c_str());
            std::printf("kept epoch %zu\n", rep.best_epoch);
            io::save_model(tr_out, a);
        } else if (*trm) {
            manifold::VaeTrainConfig vc = cfg.vae;
            if (tm_epochs) vc.epochs = *tm_epochs;
            if (tm_lr) vc.lr = *tm_lr;
            if (tm_batch) vc.batch = *tm_batch;
            if (tm_seed) vc.seed = *tm_seed;
            const auto kind = manifold::kind_from(tm_kind);
            const auto pos = io::read_normalized(tm_pos);
            const auto pos_val = tm_pos_val.empty() ? pos : io::read_normalized(tm_pos_val);
            manifold::VaeTrainReport rep;
            auto a = pipeline::train_manifold(kind, tm_beta.value_or(manifold::default_beta(kind)), pos, pos_val, vc,
                                              scheme_of(tm_norm), scale_of(tm_scale), &rep);
            for (std::size_t e = 0; e < rep.train_loss.size(); ++e)
                std::printf("epoch %zu  loss %.6f  recon %.6f  val recon %.6f\n", e + 1, rep.train_loss[e],
                            rep.train_recon[e], rep.val_recon[e]);
            if (manifold::is_vae(kind))
                std::printf("kept epoch %zu; gradient samples: %zu normal, %zu other\n", rep.best_epoch,
                            rep.audit.positive_samples, rep.audit.negative_samples);
            if (!tm_calib.empty()) {
                const auto choice = pipeline::calibrate_threshold(a, read_many(tm_calib));
                std::printf("threshold %s (J = %.6f)\n", io::format_double(choice.d).c_str(), choice.j);
            }
            io::save_model(tm_out, a);
        } else if (*thr) {
            auto a = io::load_model(th_model);
            const auto choice = pipeline::calibrate_threshold(a, read_many(th_scored));
            io::save_model(th_model, a);
            std::printf("threshold %s (J = %.6f)\n", io::format_double(choice.d).c_str(), choice.j);
        } else if (*ev) {
            const auto test = io::read_normalized(ev_test);
            std::vector<pipeline::EvaluationRecord> recs;
            for (const auto& m : ev_models) recs.push_back(pipeline::evaluate(io::load_model(m), test));
            std::cout << pipeline::format_report(recs);
            if (!ev_json.empty()) io::write_atomic(ev_json, pipeline::report_json(recs));
        } else if (*as) {
            const auto a = io::load_model(as_model);
            const auto s = io::read_stream(as_stream);
            const auto lines = pipeline::cmd_assess(
                a, s, as_norm.empty() ? std::nullopt : std::optional<prep::SizeScheme>(prep::size_scheme_from(as_norm)));
            emit(pipeline::format_verdicts(lines), as_out);
        } else if (*bench) {
            std::vector<pipeline::LatencyReport> reps;
            for (const auto& m : be_models) reps.push_back(pipeline::cmd_bench(io::load_model(m), be_cycles, be_seed));
            std::cout << pipeline::format_latency(reps);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
