// ham: toy latent-diffusion style-transfer CLI.
//
// Subcommands: train, reconstruct, invert, transfer, ablate, eval,
// gen-fixtures. Every command is deterministic for a fixed seed; artifacts
// are written atomically. Exit codes: 0 success, 1 runtime/numeric failure,
// 2 usage or validation error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ham/checkpoint.hpp"
#include "ham/dataset.hpp"
#include "ham/image.hpp"
#include "ham/metrics.hpp"
#include "ham/pipeline.hpp"
#include "ham/trainer.hpp"

namespace fs = std::filesystem;
using namespace ham;

namespace {

struct ScheduleOpts {
    int total_timesteps = 1000;
    double beta_start = 8.5e-4;
    double beta_end = 0.012;
    int steps = 50;

    NoiseSchedule build() const {
        return build_schedule(total_timesteps, beta_start, beta_end, steps);
    }
};

void add_schedule_options(CLI::App& app, ScheduleOpts& s) {
    app.add_option("--total-timesteps", s.total_timesteps, "training timestep count");
    app.add_option("--beta-start", s.beta_start, "linear beta schedule start");
    app.add_option("--beta-end", s.beta_end, "linear beta schedule end");
    app.add_option("--steps", s.steps, "inference step count");
}

void add_model_options(CLI::App& app, DenoiserConfig& c) {
    app.add_option("--latent-channels", c.latent_channels);
    app.add_option("--latent-size", c.latent_size);
    app.add_option("--width", c.width, "transformer width");
    app.add_option("--num-blocks", c.num_blocks);
    app.add_option("--heads", c.heads);
    app.add_option("--context-tokens", c.context_tokens);
    app.add_option("--context-dim", c.context_dim);
    app.add_option("--patch-size", c.patch_size);
    app.add_option("--num-conditions", c.num_conditions);
}

void add_modulation_options(CLI::App& app, ModulationConfig& m) {
    app.add_option("--alpha", m.alpha, "student weight in the GAR blend");
    app.add_option("--beta", m.beta, "student weight in the LAT query blend");
    app.add_option("--gamma", m.gamma, "content-residual weight in SINI");
    app.add_flag("--gar,!--no-gar", m.gar_enabled, "toggle GAR");
    app.add_flag("--lat,!--no-lat", m.lat_enabled, "toggle LAT");
    app.add_flag("--sini,!--no-sini", m.sini_enabled, "toggle SINI");
    app.add_option("--layer-first", m.layer_range.first);
    app.add_option("--layer-last", m.layer_range.last);
    app.add_option("--step-first", m.step_range.first);
    app.add_option("--step-last", m.step_range.last);
    app.add_option("--adain-eps", m.adain_epsilon);
}

void add_common(CLI::App& app, std::uint64_t& seed, bool& print_config) {
    app.add_option("--seed", seed)->envname("HAM_SEED");
    app.set_config("--config", "", "flat key = value config file");
    app.add_flag("--print-config", print_config, "echo the resolved configuration");
}

void maybe_print_config(const CLI::App& app, bool print_config) {
    if (print_config) std::cout << app.config_to_str(true, false);
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::is_regular_file(path))
        throw ArgumentError(what + " not found: " + path);
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open for writing: " + tmp);
        f << text;
        if (!f.good()) throw IoError("write failed: " + tmp);
    }
    fs::rename(tmp, path);
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

// ---------------------------------------------------------------- train

struct TrainCmd {
    std::string out;
    DenoiserConfig model;
    ScheduleOpts sched;
    TrainOptions opt;
    std::uint64_t seed = 0;
    bool print_config = false;

    void setup(CLI::App& app) {
        app.add_option("--out", out, "checkpoint directory")->required();
        app.add_option("--train-steps,--steps", opt.steps, "optimizer steps");
        app.add_option("--lr", opt.lr);
        app.add_option("--batch-size", opt.batch_size);
        app.add_option("--null-cond-prob", opt.null_cond_prob);
        add_model_options(app, model);
        app.add_option("--total-timesteps", sched.total_timesteps);
        app.add_option("--beta-start", sched.beta_start);
        app.add_option("--beta-end", sched.beta_end);
        app.add_option("--inference-steps", sched.steps);
        add_common(app, seed, print_config);
    }

    int run(const CLI::App& app) {
        maybe_print_config(app, print_config);
        opt.seed = seed;
        model.validate();
        Denoiser m(model);
        m.init_params(seed);
        auto schedule = sched.build();
        auto losses = train(m, schedule, default_toy_dataset(model.latent_size), opt);

        fs::create_directories(out);
        save_checkpoint(out, m);
        std::ostringstream csv;
        csv << "step,loss\n";
        for (std::size_t i = 0; i < losses.size(); ++i)
            csv << i << "," << format_double(losses[i]) << "\n";
        write_text_atomic((fs::path(out) / "loss.csv").string(), csv.str());
        std::cout << "trained " << losses.size() << " steps, final loss "
                  << format_double(losses.back()) << "\n";
        std::cout << "checkpoint: " << out << "\n";
        return 0;
    }
};

// ---------------------------------------------------- reconstruct / invert

struct InvertCmd {
    bool reconstruct = false; // reconstruct writes a PNG, invert writes HAMT
    std::string ckpt, input, out, dump_trace;
    std::size_t cond = toyset::kNullId;
    ScheduleOpts sched;
    std::uint64_t seed = 0;
    bool print_config = false;

    void setup(CLI::App& app) {
        app.add_option("--ckpt", ckpt, "checkpoint directory")->required();
        app.add_option("--input", input, "input PNG")->required();
        app.add_option("--out", out, reconstruct ? "output PNG" : "output z_T HAMT")
            ->required();
        app.add_option("--cond", cond, "condition id");
        if (!reconstruct)
            app.add_option("--dump-trace", dump_trace, "write the teacher trace here");
        add_schedule_options(app, sched);
        add_common(app, seed, print_config);
    }

    int run(const CLI::App& app) {
        maybe_print_config(app, print_config);
        require_file(input, "input image");
        if (!fs::is_directory(ckpt)) throw ArgumentError("checkpoint not found: " + ckpt);
        Denoiser model = load_checkpoint(ckpt);
        auto schedule = sched.build();
        Tensor latent = image_to_latent(load_png(input), model.config().latent_size);
        auto inv = invert_image(latent, schedule, model, Condition{cond});
        if (reconstruct) {
            save_png(out, latent_to_image(inv.reconstruction));
        } else {
            save_hamt(out, inv.z_T);
            if (!dump_trace.empty()) save_trace(dump_trace, inv.trace);
        }
        std::cout << "wrote " << out << "\n";
        return 0;
    }
};

// -------------------------------------------------------------- transfer

struct TransferCmd {
    std::string ckpt, content, style, out, dump_trace, dump_latents;
    std::size_t style_cond = 0;
    bool has_style_cond = false;
    ModulationConfig mod;
    ScheduleOpts sched;
    std::uint64_t seed = 0;
    bool print_config = false;

    void setup(CLI::App& app) {
        app.add_option("--ckpt", ckpt, "checkpoint directory")->required();
        app.add_option("--content", content, "content PNG")->required();
        app.add_option("--style", style, "style PNG (image-guided)");
        app.add_option("--style-cond", style_cond, "style condition id (text-guided)")
            ->each([this](const std::string&) { has_style_cond = true; });
        app.add_option("--out", out, "output PNG")->required();
        app.add_option("--dump-trace", dump_trace,
                       "directory for content/ and style/ teacher traces");
        app.add_option("--dump-latents", dump_latents,
                       "directory for z_T_content/style/main HAMT dumps");
        add_modulation_options(app, mod);
        add_schedule_options(app, sched);
        add_common(app, seed, print_config);
    }

    TransferResult execute(Denoiser& model, NoiseSchedule& schedule) {
        require_file(content, "content image");
        if (style.empty() && !has_style_cond)
            throw ArgumentError("transfer: provide --style or --style-cond");
        if (!style.empty() && has_style_cond)
            throw ArgumentError("transfer: --style and --style-cond are exclusive");
        if (!fs::is_directory(ckpt)) throw ArgumentError("checkpoint not found: " + ckpt);
        model = load_checkpoint(ckpt);
        schedule = sched.build();
        const std::size_t S = model.config().latent_size;

        TransferRequest req;
        req.content_latent = image_to_latent(load_png(content), S);
        if (!style.empty()) {
            require_file(style, "style image");
            req.style_latent = image_to_latent(load_png(style), S);
        } else {
            req.style_condition = style_cond;
        }
        req.mod = mod;
        req.seed = seed;
        return transfer(model, schedule, req);
    }

    int run(const CLI::App& app) {
        maybe_print_config(app, print_config);
        Denoiser model{DenoiserConfig{}};
        NoiseSchedule schedule;
        TransferResult res = execute(model, schedule);
        save_png(out, res.stylized_image);
        if (!dump_latents.empty()) {
            fs::create_directories(dump_latents);
            save_hamt((fs::path(dump_latents) / "z_T_content.hamt").string(),
                      res.z_T_content);
            save_hamt((fs::path(dump_latents) / "z_T_style.hamt").string(), res.z_T_style);
            save_hamt((fs::path(dump_latents) / "z_T_main.hamt").string(), res.z_T_main);
        }
        if (!dump_trace.empty()) {
            save_trace((fs::path(dump_trace) / "content").string(), res.content_trace);
            save_trace((fs::path(dump_trace) / "style").string(), res.style_trace);
        }
        std::cout << "wrote " << out << "\n";
        return 0;
    }
};

// ---------------------------------------------------------------- ablate

struct AblateCmd {
    TransferCmd base; // shares inputs and configuration with transfer
    std::string out_dir;

    void setup(CLI::App& app) {
        app.add_option("--ckpt", base.ckpt, "checkpoint directory")->required();
        app.add_option("--content", base.content, "content PNG")->required();
        app.add_option("--style", base.style, "style PNG (image-guided)");
        app.add_option("--style-cond", base.style_cond, "style condition id")
            ->each([this](const std::string&) { base.has_style_cond = true; });
        app.add_option("--out-dir", out_dir, "directory for A.png..H.png + summary.csv")
            ->required();
        add_modulation_options(app, base.mod);
        add_schedule_options(app, base.sched);
        add_common(app, base.seed, base.print_config);
    }

    int run(const CLI::App& app) {
        maybe_print_config(app, base.print_config);
        require_file(base.content, "content image");
        if (base.style.empty() && !base.has_style_cond)
            throw ArgumentError("ablate: provide --style or --style-cond");
        if (!fs::is_directory(base.ckpt))
            throw ArgumentError("checkpoint not found: " + base.ckpt);
        Denoiser model = load_checkpoint(base.ckpt);
        auto schedule = base.sched.build();
        const std::size_t S = model.config().latent_size;

        TransferRequest req;
        req.content_latent = image_to_latent(load_png(base.content), S);
        if (!base.style.empty()) {
            require_file(base.style, "style image");
            req.style_latent = image_to_latent(load_png(base.style), S);
        } else {
            req.style_condition = base.style_cond;
        }
        req.mod = base.mod;
        req.seed = base.seed;

        const auto rows = standard_ablation_rows();
        auto results = ablation_matrix(model, schedule, req, rows);

        fs::create_directories(out_dir);
        std::ostringstream csv;
        csv << "row,gar,lat,sini,stat_distance_to_style\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const char name = static_cast<char>('A' + i);
            save_png((fs::path(out_dir) / (std::string(1, name) + ".png")).string(),
                     results[i].stylized_image);
            const double d = channel_stat_distance(results[i].stylized_latent,
                                                   results[i].style_recon_latent);
            csv << name << "," << (rows[i].gar ? 1 : 0) << "," << (rows[i].lat ? 1 : 0)
                << "," << (rows[i].sini ? 1 : 0) << "," << format_double(d) << "\n";
        }
        write_text_atomic((fs::path(out_dir) / "summary.csv").string(), csv.str());
        std::cout << "wrote " << rows.size() << " images + summary.csv to " << out_dir
                  << "\n";
        return 0;
    }
};

// ------------------------------------------------------------------ eval

struct EvalCmd {
    std::string scores, out;

    void setup(CLI::App& app) {
        app.add_option("--scores", scores, "input scores CSV")->required();
        app.add_option("--out", out, "output CSV (stdout when omitted)");
    }

    int run() {
        require_file(scores, "scores CSV");
        std::string rendered;
        try {
            rendered = render_scores_csv(parse_scores_csv(read_text(scores)));
        } catch (const IoError& e) {
            // malformed input is a validation problem, not a runtime one
            throw ArgumentError(e.what());
        }
        if (out.empty())
            std::cout << rendered;
        else {
            write_text_atomic(out, rendered);
            std::cout << "wrote " << out << "\n";
        }
        return 0;
    }
};

// ---------------------------------------------------------- gen-fixtures

struct GenFixturesCmd {
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t size = 32;
    int count = 1;

    void setup(CLI::App& app) {
        app.add_option("--out-dir", out_dir)->required();
        app.add_option("--seed", seed)->envname("HAM_SEED");
        app.add_option("--size", size, "image side length");
        app.add_option("--count", count, "images per class");
    }

    int run() {
        if (count < 1) throw ArgumentError("gen-fixtures: count must be >= 1");
        fs::create_directories(out_dir);
        const std::pair<std::size_t, const char*> classes[] = {
            {toyset::kShapesId, "shapes"},
            {toyset::kStripesId, "stripes"},
            {toyset::kCheckerId, "checker"},
            {toyset::kPaletteId, "palette"},
        };
        for (const auto& [id, name] : classes)
            for (int i = 0; i < count; ++i) {
                Tensor latent = toyset::make_by_class(id, seed + i, size);
                const std::string file =
                    std::string(name) + "_" + std::to_string(i) + ".png";
                save_png((fs::path(out_dir) / file).string(), latent_to_image(latent));
            }

        // reference score table, consumable by `eval`
        std::ostringstream csv;
        csv << "method,dino,clip_i,clip_t,fid,lpips\n";
        for (const auto& row : reference_table())
            csv << row.method << "," << row.dino << "," << row.clip_i << ","
                << row.clip_t << "," << row.fid << "," << row.lpips << "\n";
        write_text_atomic((fs::path(out_dir) / "table1.csv").string(), csv.str());
        std::cout << "wrote fixtures to " << out_dir << "\n";
        return 0;
    }
};

template <class F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"toy latent-diffusion style-transfer engine"};
    app.require_subcommand(1);

    TrainCmd train_cmd;
    InvertCmd recon_cmd, invert_cmd;
    recon_cmd.reconstruct = true;
    TransferCmd transfer_cmd;
    AblateCmd ablate_cmd;
    EvalCmd eval_cmd;
    GenFixturesCmd gen_cmd;

    auto* s_train = app.add_subcommand("train", "train the toy denoiser");
    train_cmd.setup(*s_train);
    auto* s_recon = app.add_subcommand("reconstruct", "invert + replay an image");
    recon_cmd.setup(*s_recon);
    auto* s_invert = app.add_subcommand("invert", "invert an image to z_T");
    invert_cmd.setup(*s_invert);
    auto* s_transfer = app.add_subcommand("transfer", "style transfer");
    transfer_cmd.setup(*s_transfer);
    auto* s_ablate = app.add_subcommand("ablate", "all 8 toggle combinations");
    ablate_cmd.setup(*s_ablate);
    auto* s_eval = app.add_subcommand("eval", "compute composite score columns");
    eval_cmd.setup(*s_eval);
    auto* s_gen = app.add_subcommand("gen-fixtures", "write toy images + table1.csv");
    gen_cmd.setup(*s_gen);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (s_train->parsed()) return guarded([&] { return train_cmd.run(*s_train); });
    if (s_recon->parsed()) return guarded([&] { return recon_cmd.run(*s_recon); });
    if (s_invert->parsed()) return guarded([&] { return invert_cmd.run(*s_invert); });
    if (s_transfer->parsed()) return guarded([&] { return transfer_cmd.run(*s_transfer); });
    if (s_ablate->parsed()) return guarded([&] { return ablate_cmd.run(*s_ablate); });
    if (s_eval->parsed()) return guarded([&] { return eval_cmd.run(); });
    if (s_gen->parsed()) return guarded([&] { return gen_cmd.run(); });
    return 2;
}
