#include "docres/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "docres/config.hpp"
#include "docres/errors.hpp"
#include "docres/imgproc.hpp"
#include "docres/metrics.hpp"
#include "docres/net.hpp"
#include "docres/synth.hpp"
#include "docres/tensor.hpp"

namespace docres::cli {

namespace fs = std::filesystem;

namespace {

Config load_config(const std::string& config_path, uint64_t seed_flag, bool seed_given) {
    Config c = config_path.empty() ? Config{} : Config::parse_file(config_path);
    if (seed_given) c.set("seed", std::to_string(seed_flag));
    return c;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write: " + path);
    f << text;
    if (!f) throw IoError("write failed: " + path);
}

void cmd_prompt(const std::string& input, const std::string& task_token,
                const std::string& prefix, const Config& conf) {
    const Image img = load_image(input);
    const TaskKind task = task_from_name(task_token);
    const prompt::PromptConfig pcfg = prompt_config_from(conf);
    const prompt::DTSPrompt p = prompt::generate(img, task, pcfg);

    for (int plane = 0; plane < 3; ++plane) {
        Image out(p.height, p.width, 1);
        std::copy(p.plane(plane), p.plane(plane) + out.data.size(), out.data.begin());
        save_image(out, prefix + "_p" + std::to_string(plane) + ".png");
    }
    write_tensor(prompt::fuse(p, img), prefix + "_fused.drt1");
}

void cmd_synth(const std::string& out_dir, int n_per_task, const Config& conf) {
    if (n_per_task < 1) throw UsageError("--n-per-task must be >= 1");
    const synth::SynthConfig scfg = synth_config_from(conf);
    const std::string manifest = synth::make_dataset(scfg, n_per_task, out_dir);
    std::cout << "wrote " << manifest << "\n";
}

void cmd_train(const std::string& manifest_path, const std::string& out_dir,
               const Config& conf) {
    const Manifest manifest = Manifest::load(manifest_path);
    const net::TrainConfig tcfg = train_config_from(conf);
    const prompt::PromptConfig pcfg = prompt_config_from(conf);

    Rng init_rng(tcfg.seed);
    net::Model model = net::build_model(tcfg.widths, init_rng);
    const net::TrainResult result = net::train(model, manifest, tcfg, pcfg);

    net::save_checkpoint(model, tcfg, out_dir);
    write_text((fs::path(out_dir) / "loss_log.txt").string(), result.loss_log);
    std::cout << "checkpoint written to " << out_dir << "\n";
}

void cmd_restore(const std::string& checkpoint, const std::string& input,
                 const std::string& task_token, const std::string& out,
                 const Config& conf) {
    const TaskKind task = task_from_name(task_token);
    net::TrainConfig tcfg;
    const net::Model model = net::load_checkpoint(checkpoint, &tcfg);
    const prompt::PromptConfig pcfg = prompt_config_from(conf);
    const Image img = load_image(input);
    const net::Prediction pred =
        net::predict(model, img, task, tcfg.prompt_mode, pcfg, tcfg.patch);
    save_image(pred.image, out);
}

struct EvalBatch {
    std::vector<Image> pred_images, gt_images, inputs, flat_refs;
    std::vector<BinaryMap> pred_maps, gt_maps;
    std::vector<BackwardMap> pred_bms;
};

void cmd_eval(const std::string& checkpoint, const std::string& baseline,
              const std::string& manifest_path, const std::string& report_dir,
              const Config& conf) {
    if (checkpoint.empty() == baseline.empty())
        throw UsageError("eval: exactly one of --checkpoint or --baseline required");
    if (!baseline.empty() && baseline != "classical")
        throw UsageError("eval: unknown baseline '" + baseline + "' (want 'classical')");

    const Manifest manifest = Manifest::load(manifest_path);
    const prompt::PromptConfig pcfg = prompt_config_from(conf);
    net::TrainConfig tcfg;
    net::Model model;
    if (!checkpoint.empty()) model = net::load_checkpoint(checkpoint, &tcfg);

    std::error_code ec;
    fs::create_directories(report_dir, ec);
    if (ec) throw IoError("cannot create report directory: " + report_dir);

    for (TaskKind task : kAllTasks) {
        const auto indices = manifest.indices_for(task);
        if (indices.empty()) continue;

        EvalBatch batch;
        for (size_t idx : indices) {
            const ManifestRecord& rec = manifest.records[idx];
            const Image input = load_image(manifest.resolve(rec.input));

            if (task == TaskKind::Dewarp) {
                const Tensor t = read_tensor(manifest.resolve(rec.target));
                if (t.shape.size() != 3 || t.shape[0] != 2)
                    throw FormatError("dewarp target must be a [2,h,w] tensor");
                BackwardMap gt_bm(int(t.shape[1]), int(t.shape[2]));
                std::copy(t.data.begin(), t.data.begin() + ptrdiff_t(gt_bm.row.size()),
                          gt_bm.row.begin());
                std::copy(t.data.begin() + ptrdiff_t(gt_bm.row.size()), t.data.end(),
                          gt_bm.col.begin());

                BackwardMap pred_bm;
                if (checkpoint.empty()) {
                    pred_bm = BackwardMap::identity(input.height, input.width);
                } else {
                    auto pred = net::predict(model, input, task, tcfg.prompt_mode, pcfg,
                                             tcfg.patch);
                    pred_bm = std::move(*pred.bm);
                }
                batch.flat_refs.push_back(imgproc::remap_bilinear(input, gt_bm));
                batch.inputs.push_back(std::move(input));
                batch.pred_bms.push_back(std::move(pred_bm));
            } else if (task == TaskKind::Binarize) {
                const BinaryMap gt = binary_from_image(load_image(manifest.resolve(rec.target)));
                BinaryMap pred;
                if (checkpoint.empty()) {
                    const auto sau = imgproc::sauvola(imgproc::to_grayscale(input));
                    pred = sau.binary;
                } else {
                    auto p = net::predict(model, input, task, tcfg.prompt_mode, pcfg, tcfg.patch);
                    pred = std::move(*p.binary);
                }
                batch.pred_maps.push_back(std::move(pred));
                batch.gt_maps.push_back(gt);
            } else {
                const Image gt = load_image(manifest.resolve(rec.target));
                Image pred;
                if (checkpoint.empty()) {
                    pred = input;
                } else {
                    pred = net::predict(model, input, task, tcfg.prompt_mode, pcfg, tcfg.patch)
                               .image;
                }
                batch.pred_images.push_back(std::move(pred));
                batch.gt_images.push_back(gt);
            }
        }

        metrics::MetricReport report;
        if (task == TaskKind::Dewarp)
            report = metrics::evaluate(batch.inputs, batch.pred_bms, batch.flat_refs);
        else if (task == TaskKind::Binarize)
            report = metrics::evaluate(batch.pred_maps, batch.gt_maps);
        else
            report = metrics::evaluate(task, batch.pred_images, batch.gt_images);

        const std::string path =
            (fs::path(report_dir) / ("report_" + std::string(task_name(task)) + ".txt")).string();
        write_text(path, report.to_text());
        std::cout << task_name(task) << ":\n" << report.to_text();
    }
}

void cmd_pipeline(const std::string& checkpoint, const std::string& input,
                  const std::string& out_dir, const std::string& stages_csv,
                  const Config& conf) {
    std::vector<TaskKind> stages;
    std::stringstream ss(stages_csv);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        TaskKind t;
        try {
            t = task_from_name(token);
        } catch (const FormatError&) {
            throw UsageError("pipeline: unknown stage '" + token + "'");
        }
        if (t != TaskKind::Dewarp && t != TaskKind::Deshadow && t != TaskKind::Appearance)
            throw UsageError("pipeline: stage must be one of dewarp,deshadow,appearance");
        for (TaskKind seen : stages)
            if (seen == t) throw UsageError("pipeline: duplicate stage '" + token + "'");
        stages.push_back(t);
    }
    if (stages.empty())
        throw UsageError("pipeline: --stages must name at least one stage");

    net::TrainConfig tcfg;
    const net::Model model = net::load_checkpoint(checkpoint, &tcfg);
    const prompt::PromptConfig pcfg = prompt_config_from(conf);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir);

    Image current = load_image(input);
    std::string final_path;
    for (size_t i = 0; i < stages.size(); ++i) {
        const net::Prediction pred =
            net::predict(model, current, stages[i], tcfg.prompt_mode, pcfg, tcfg.patch);
        current = pred.image;
        // every intermediate is persisted so stage-to-stage error accumulation
        // stays inspectable
        final_path = (fs::path(out_dir) /
                      ("stage_" + std::to_string(i + 1) + "_" + task_name(stages[i]) + ".png"))
                         .string();
        save_image(current, final_path);
    }
    save_image(current, (fs::path(out_dir) / "final.png").string());
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"docres: prompt-conditioned multi-task document image restoration"};
    app.require_subcommand(1);

    std::string input, task, prefix, out_dir, manifest, checkpoint, out, report_dir;
    std::string config_path, stages = "dewarp,deshadow,appearance", baseline;
    int n_per_task = 10;
    uint64_t seed = 0;
    bool seed_given = false;

    auto add_seed = [&](CLI::App* sc) {
        sc->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_given = true; });
    };
    auto add_config = [&](CLI::App* sc) {
        sc->add_option("--config", config_path, "key=value config file")
            ->check(CLI::ExistingFile);
    };

    auto* sc_prompt = app.add_subcommand("prompt", "write the three prompt planes and fused tensor");
    sc_prompt->add_option("--input", input)->required()->check(CLI::ExistingFile);
    sc_prompt->add_option("--task", task)->required();
    sc_prompt->add_option("--out-prefix", prefix)->required();
    add_config(sc_prompt);

    auto* sc_synth = app.add_subcommand("synth", "generate a synthetic paired dataset");
    sc_synth->add_option("--out-dir", out_dir)->required();
    sc_synth->add_option("--n-per-task", n_per_task)->required();
    add_seed(sc_synth);
    add_config(sc_synth);

    auto* sc_train = app.add_subcommand("train", "train the unified restoration model");
    sc_train->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
    sc_train->add_option("--out-dir", out_dir)->required();
    add_seed(sc_train);
    add_config(sc_train);

    auto* sc_restore = app.add_subcommand("restore", "run one restoration task on one image");
    sc_restore->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingDirectory);
    sc_restore->add_option("--input", input)->required()->check(CLI::ExistingFile);
    sc_restore->add_option("--task", task)->required();
    sc_restore->add_option("--out", out)->required();
    add_config(sc_restore);

    auto* sc_eval = app.add_subcommand("eval", "evaluate on a held-out manifest");
    sc_eval->add_option("--checkpoint", checkpoint)->check(CLI::ExistingDirectory);
    sc_eval->add_option("--baseline", baseline, "classical: identity/Sauvola baselines");
    sc_eval->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
    sc_eval->add_option("--report", report_dir)->required();
    add_config(sc_eval);

    auto* sc_pipeline = app.add_subcommand("pipeline", "chained restoration with intermediates");
    sc_pipeline->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingDirectory);
    sc_pipeline->add_option("--input", input)->required()->check(CLI::ExistingFile);
    sc_pipeline->add_option("--out-dir", out_dir)->required();
    sc_pipeline->add_option("--stages", stages, "ordered subset of dewarp,deshadow,appearance");
    add_config(sc_pipeline);

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(int(argv.size()), argv.data());
        const Config conf = load_config(config_path, seed, seed_given);
        if (sc_prompt->parsed()) cmd_prompt(input, task, prefix, conf);
        else if (sc_synth->parsed()) cmd_synth(out_dir, n_per_task, conf);
        else if (sc_train->parsed()) cmd_train(manifest, out_dir, conf);
        else if (sc_restore->parsed()) cmd_restore(checkpoint, input, task, out, conf);
        else if (sc_eval->parsed()) cmd_eval(checkpoint, baseline, manifest, report_dir, conf);
        else if (sc_pipeline->parsed()) cmd_pipeline(checkpoint, input, out_dir, stages, conf);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace docres::cli
