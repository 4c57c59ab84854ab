// easynet command line: gen-data, train, eval, infer, bench, sweep-alpha.

#include "easynet/checkpoint.hpp"
#include "easynet/config.hpp"
#include "easynet/dataset.hpp"
#include "easynet/error.hpp"
#include "easynet/pipeline.hpp"
#include "easynet/ransac.hpp"
#include "easynet/raster_io.hpp"
#include "easynet/report.hpp"
#include "easynet/synthetic_dataset.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace easynet;

namespace {

struct Globals {
    std::string config_path;
    std::string preset = "full";
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
};

PipelineConfig resolve(const Globals& g) {
    PipelineConfig base = g.preset == "desk" ? desk_scale_defaults() : PipelineConfig{};
    PipelineConfig cfg = g.config_path.empty() ? base : load_config(g.config_path, base);
    if (g.seed) {
        cfg.train.seed = *g.seed;
        cfg.synthetic.seed = *g.seed;
    }
    set_deterministic(g.deterministic);
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

std::vector<std::string> categories_or_all(const std::vector<std::string>& wanted, const fs::path& root) {
    if (!wanted.empty()) return wanted;
    auto all = list_categories(root);
    if (all.empty()) throw IoError("no categories under " + root.string());
    return all;
}

fs::path checkpoint_for(const std::string& checkpoint, const std::string& dir, const std::string& category) {
    if (!checkpoint.empty()) return checkpoint;
    if (dir.empty()) throw ConfigError("pass --checkpoint or --checkpoint-dir");
    return fs::path(dir) / (category + ".ckpt");
}

std::vector<RgbdSample> load_split(const PipelineConfig& cfg, const std::string& category, Split split) {
    std::vector<std::string> warnings;
    auto samples = load_mvtec3d(cfg.data, category, split, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return samples;
}

double parse_alpha(const std::string& s) {
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("bad alpha value '" + s + "'");
    return v;
}

std::string slug(const std::string& id) {
    std::string out = id;
    for (char& c : out) {
        if (c == '/') c = '_';
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RGB-D anomaly detection without pretrained backbones or memory banks"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "INI config file")->check(CLI::ExistingFile);
    app.add_option("--preset", g.preset, "Base defaults before the config file")->check(CLI::IsMember({"full", "desk"}));
    app.add_option("--seed", g.seed, "Overrides train.seed and synthetic.seed");
    app.add_flag("--deterministic", g.deterministic, "Single-threaded, bit-reproducible execution");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Write the procedural RGB-D benchmark");
    std::string gen_out;
    gen->add_option("--out", gen_out, "Dataset root")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train one model per category");
    std::string data_root, ckpt_out_dir, log_dir;
    std::vector<std::string> categories;
    std::optional<int> steps;
    train_cmd->add_option("--data", data_root, "Dataset root (overrides data.root)");
    train_cmd->add_option("--category", categories, "Categories (default: all)")->delimiter(',');
    train_cmd->add_option("--out", ckpt_out_dir, "Directory for <category>.ckpt and <category>.log.csv")->required();
    train_cmd->add_option("--steps", steps, "Overrides train.steps");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints on the test split");
    std::string checkpoint, checkpoint_dir, eval_out, gate_mode;
    std::optional<double> alpha;
    bool heatmaps = false;
    std::vector<std::string> defects;
    eval_cmd->add_option("--data", data_root, "Dataset root (overrides data.root)");
    eval_cmd->add_option("--category", categories, "Categories (default: all)")->delimiter(',');
    eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint for a single category");
    eval_cmd->add_option("--checkpoint-dir", checkpoint_dir, "Directory holding <category>.ckpt");
    eval_cmd->add_option("--out", eval_out, "Output directory")->required();
    eval_cmd->add_option("--gate", gate_mode, "control, open or close (overrides eval.gate_mode)");
    eval_cmd->add_option("--alpha", alpha, "Overrides gate.alpha");
    eval_cmd->add_option("--defects", defects, "Defect kinds kept besides good")->delimiter(',');
    eval_cmd->add_flag("--heatmaps", heatmaps, "Write a heatmap panel per sample");

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "Score one RGB + point-map pair");
    std::string rgb_path, xyz_path, gt_path, panel_path;
    infer_cmd->add_option("--checkpoint", checkpoint, "Checkpoint")->required();
    infer_cmd->add_option("--rgb", rgb_path, "RGB PNG")->required()->check(CLI::ExistingFile);
    infer_cmd->add_option("--xyz", xyz_path, "Organized point map TIFF")->required()->check(CLI::ExistingFile);
    infer_cmd->add_option("--gt", gt_path, "Ground-truth PNG for the panel")->check(CLI::ExistingFile);
    infer_cmd->add_option("--panel", panel_path, "Heatmap panel PNG to write");
    infer_cmd->add_option("--alpha", alpha, "Overrides gate.alpha");
    infer_cmd->add_option("--gate", gate_mode, "control, open or close");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Time single-sample inference");
    std::string bench_out;
    std::optional<int> warmup, timed;
    bench_cmd->add_option("--checkpoint", checkpoint, "Checkpoint (default: a freshly initialized model)");
    bench_cmd->add_option("--warmup", warmup, "Overrides bench.warmup");
    bench_cmd->add_option("--timed", timed, "Overrides bench.timed");
    bench_cmd->add_option("--gate", gate_mode, "control, open or close");
    bench_cmd->add_option("--out", bench_out, "Also write the result as key-value text");

    // sweep-alpha
    auto* sweep_cmd = app.add_subcommand("sweep-alpha", "Mean I-AUROC against the gate threshold");
    std::vector<std::string> alphas{"-inf", "-0.05", "0", "0.05", "inf"};
    std::string sweep_out;
    sweep_cmd->add_option("--data", data_root, "Dataset root (overrides data.root)");
    sweep_cmd->add_option("--category", categories, "Categories (default: all)")->delimiter(',');
    sweep_cmd->add_option("--checkpoint-dir", checkpoint_dir, "Directory holding <category>.ckpt")->required();
    sweep_cmd->add_option("--alphas", alphas, "Alpha values; inf and -inf are the gate endpoints")->delimiter(',');
    sweep_cmd->add_option("--defects", defects, "Defect kinds kept besides good")->delimiter(',');
    sweep_cmd->add_option("--out", sweep_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig cfg = resolve(g);
        if (!data_root.empty()) cfg.data.root = data_root;
        if (steps) cfg.train.steps = *steps;
        if (alpha) cfg.gate.alpha = *alpha;
        if (!gate_mode.empty()) cfg.eval.gate_mode = parse_gate_mode(gate_mode);
        if (!defects.empty()) cfg.eval.defects = defects;
        if (warmup) cfg.bench.warmup = *warmup;
        if (timed) cfg.bench.timed = *timed;
        cfg.validate();

        if (*gen) {
            generate_synthetic_dataset(cfg.synthetic, gen_out);
            std::cout << "wrote " << cfg.synthetic.categories.size() << " categories to " << gen_out << '\n';
            return 0;
        }

        if (*train_cmd) {
            fs::create_directories(ckpt_out_dir);
            std::ostringstream resolved;
            write_config(cfg, resolved);
            write_text(fs::path(ckpt_out_dir) / "config.ini", resolved.str());
            for (const auto& category : categories_or_all(categories, cfg.data.root)) {
                const auto data = load_split(cfg, category, Split::train);
                TrainOptions opts;
                opts.checkpoint = fs::path(ckpt_out_dir) / (category + ".ckpt");
                const int every = std::max(1, cfg.train.steps / 20);
                opts.on_step = [&](const StepLog& l) {
                    if (l.step % every == 0 || l.step + 1 == cfg.train.steps) {
                        std::cout << category << " step " << l.step << " lr " << l.lr << " L_rgb " << l.l_rgb
                                  << " L_total " << l.l_total << '\n';
                    }
                };
                const auto t0 = std::chrono::steady_clock::now();
                const TrainResult r = train(data, cfg.model, cfg.train, cfg.augment, cfg.loss, opts);
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                std::ofstream log(fs::path(ckpt_out_dir) / (category + ".log.csv"));
                write_train_log(r.log, log);
                std::cout << category << ": " << r.log.size() << " steps in " << std::fixed << std::setprecision(1)
                          << secs << " s -> " << opts.checkpoint.string() << std::defaultfloat << '\n';
            }
            return 0;
        }

        if (*eval_cmd) {
            EvalReport report;
            report.alpha = cfg.gate.alpha;
            report.gate_mode = to_string(cfg.eval.gate_mode);
            report.fingerprint = hardware_fingerprint();
            const auto cats = categories_or_all(categories, cfg.data.root);
            if (!checkpoint.empty() && cats.size() > 1) throw ConfigError("--checkpoint needs exactly one --category");
            for (const auto& category : cats) {
                const EasyNet model = load_checkpoint(checkpoint_for(checkpoint, checkpoint_dir, category));
                const auto test = load_split(cfg, category, Split::test);
                CategoryEvaluation ev = evaluate_model(model, test, cfg.gate, cfg.eval);
                if (heatmaps) {
                    std::size_t k = 0;
                    for (const RgbdSample& s : test) {
                        const bool keep = s.defect == "good" || cfg.eval.defects.empty() ||
                                          std::find(cfg.eval.defects.begin(), cfg.eval.defects.end(), s.defect) !=
                                              cfg.eval.defects.end();
                        if (!keep) continue;
                        const Tensor gt = s.gt_mask ? *s.gt_mask : Tensor({1, 1, s.height(), s.width()});
                        const fs::path p = fs::path(eval_out) / "heatmaps" / category / (slug(s.id) + ".png");
                        fs::create_directories(p.parent_path());
                        write_png(p, render_heatmap_panel(s.rgb, ev.inferences[k++].map.probs, gt));
                    }
                }
                add_category(report, category, std::move(ev));
            }
            std::ostringstream txt, csv, samples;
            write_report_text(report, txt);
            write_report_csv(report, csv);
            write_samples_csv(report, samples);
            write_text(fs::path(eval_out) / "report.txt", txt.str());
            write_text(fs::path(eval_out) / "report.csv", csv.str());
            write_text(fs::path(eval_out) / "samples.csv", samples.str());
            const std::string table = render_category_table(report);
            write_text(fs::path(eval_out) / "table.txt", table);
            write_text(fs::path(eval_out) / "table.csv", render_category_csv(report));
            std::cout << table;
            return 0;
        }

        if (*infer_cmd) {
            const EasyNet model = load_checkpoint(checkpoint);
            const int s = model.config().mrn.input_size;
            RgbdSample sample;
            sample.id = fs::path(rgb_path).stem().string();
            Tensor rgb = read_png(rgb_path);
            if (rgb.c() == 1) {
                const Tensor* parts[3] = {&rgb, &rgb, &rgb};
                rgb = concat_channels(parts);
            }
            sample.rgb = resize_bilinear(rgb, s, s);
            sample.depth =
                ransac_plane_removal(resize_nearest(read_xyz_tiff(xyz_path), s, s), cfg.data.ransac, cfg.data.foreground_floor)
                    .depth;
            const Inference inf = model.infer(sample, cfg.gate, cfg.eval.gate_mode, cfg.eval.score);
            std::cout << std::setprecision(6) << "image_score = " << inf.map.image_score << '\n'
                      << "gate = " << to_string(inf.gate.mode) << '\n'
                      << "entropy_fused = " << inf.gate.entropy_fused << '\n'
                      << "entropy_rgb = " << inf.gate.entropy_rgb << '\n';
            if (!panel_path.empty()) {
                Tensor gt({1, 1, s, s});
                if (!gt_path.empty()) {
                    gt = resize_nearest(read_png(gt_path), s, s);
                    for (real& v : gt.data()) v = v > real(0.5) ? real(1) : real(0);
                }
                write_png(panel_path, render_heatmap_panel(sample.rgb, inf.map.probs, gt));
            }
            return 0;
        }

        if (*bench_cmd) {
            const EasyNet model = checkpoint.empty() ? EasyNet(cfg.model) : load_checkpoint(checkpoint);
            const int s = model.config().mrn.input_size;
            RgbdSample sample;
            sample.id = "bench";
            sample.rgb = Tensor({1, 3, s, s}, real(0.5));
            sample.depth = Tensor({1, 1, s, s}, real(0.5));
            const BenchResult r = benchmark_fps(model, sample, cfg.gate, cfg.eval.gate_mode, cfg.bench.warmup, cfg.bench.timed);
            std::ostringstream out;
            out << std::setprecision(6) << "input_size = " << s << '\n'
                << "timed = " << r.timed << '\n'
                << "fps = " << r.fps << '\n'
                << "mean_ms = " << r.mean_ms << '\n'
                << "p50_ms = " << r.p50_ms << '\n'
                << "p95_ms = " << r.p95_ms << '\n'
                << "hardware = " << r.hardware << '\n';
            std::cout << out.str();
            if (!bench_out.empty()) write_text(bench_out, out.str());
            return 0;
        }

        if (*sweep_cmd) {
            const auto cats = categories_or_all(categories, cfg.data.root);
            std::vector<std::pair<EasyNet, std::vector<RgbdSample>>> loaded;
            for (const auto& category : cats) {
                loaded.emplace_back(load_checkpoint(checkpoint_for("", checkpoint_dir, category)),
                                    load_split(cfg, category, Split::test));
            }
            std::vector<std::pair<double, EvalReport>> reports;
            for (const std::string& a : alphas) {
                GateConfig gate = cfg.gate;
                gate.alpha = parse_alpha(a);
                EvalConfig ev = cfg.eval;
                ev.gate_mode = GateMode::control;
                EvalReport report;
                report.alpha = gate.alpha;
                report.gate_mode = "control";
                for (std::size_t i = 0; i < cats.size(); ++i) {
                    add_category(report, cats[i], evaluate_model(loaded[i].first, loaded[i].second, gate, ev));
                }
                std::cout << "alpha " << a << ": mean I-AUROC " << report.mean.i_auroc << ", fused fraction "
                          << report.mean.gate_fused_fraction << '\n';
                reports.emplace_back(gate.alpha, std::move(report));
            }
            const auto points = sweep_points(reports);
            write_text(fs::path(sweep_out) / "alpha_sweep.csv", render_alpha_sweep_csv(points));
            write_text(fs::path(sweep_out) / "alpha_sweep.svg", render_alpha_sweep_svg(points));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
