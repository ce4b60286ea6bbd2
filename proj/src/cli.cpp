#include "lckasr/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lckasr/complexity.hpp"
#include "lckasr/image_io.hpp"
#include "lckasr/metrics.hpp"
#include "lckasr/model.hpp"
#include "lckasr/run_config.hpp"
#include "lckasr/train.hpp"

namespace fs = std::filesystem;

namespace lckasr {

namespace {

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out) throw DataError("write to '" + tmp + "' failed");
    }
    fs::rename(tmp, path);
}

void log_resolved(const RunConfig& rc) {
    std::string text = rc.resolved_text();
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        std::cout << "config " << text.substr(start, end - start) << "\n";
        start = end + 1;
    }
}

std::vector<fs::path> list_pngs(const std::string& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("'" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::string metric_csv_header(const RunConfig& rc, int crop) {
    std::string out;
    out += "# y channel: bt601 studio swing, y = 16 + (65.481 r + 128.553 g + 24.966 b) / 255\n";
    out += "# border crop per side: " + std::to_string(crop) + "\n";
    out += "# degradation: antialiased bicubic (a = -0.5), hr cropped to a multiple of the scale\n";
    std::string cfg = rc.resolved_text();
    std::size_t start = 0;
    while (start < cfg.size()) {
        std::size_t end = cfg.find('\n', start);
        out += "# config " + cfg.substr(start, end - start) + "\n";
        start = end + 1;
    }
    return out;
}

std::string format_metric(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

int cmd_analyze(const RunConfig& rc, const std::string& out_dir) {
    const ModelConfig cfg = rc.model();
    fs::create_directories(out_dir);

    ComplexityReport params = count_params(cfg);
    ComplexityReport macs = count_multiadds(cfg, rc.out_h(), rc.out_w());
    // one combined report: parameter column from the one, MACs from the other
    ComplexityReport combined = macs;
    write_text_atomic(out_dir + "/complexity.txt", complexity_report_text(combined));
    write_text_atomic(out_dir + "/complexity.csv", complexity_report_csv(combined));

    auto variants = compare_variants(cfg, rc.out_h(), rc.out_w());
    write_text_atomic(out_dir + "/variants.txt", variants_table_text(variants));
    write_text_atomic(out_dir + "/variants.csv", variants_table_csv(variants));

    std::cout << "params " << params.total_params << "\n";
    std::cout << "multiadds " << macs.total_macs << " at " << rc.out_w() << "x" << rc.out_h()
              << "\n";
    std::cout << "reports written to " << out_dir << "\n";
    return 0;
}

int cmd_degrade(const RunConfig& rc, const std::string& hr_dir, const std::string& out_dir) {
    const int scale = rc.model().scale;
    const auto files = list_pngs(hr_dir);
    if (files.empty()) throw ConfigError("no .png files in '" + hr_dir + "'");
    fs::create_directories(out_dir);
    std::size_t ok = 0;
    for (const auto& file : files) {
        try {
            ImageU8 hr = read_png(file.string());
            ImageU8 lr = degrade_bicubic(hr, scale);
            write_png(lr, (fs::path(out_dir) / file.filename()).string());
            ++ok;
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping '" << file.string() << "': " << e.what() << "\n";
        }
    }
    std::cout << "degraded " << ok << " of " << files.size() << " images\n";
    if (ok == 0) throw DataError("no image could be degraded");
    return 0;
}

Dataset load_dataset(const RunConfig& rc, const std::string& hr_dir, const std::string& lr_dir) {
    const int scale = rc.model().scale;
    const auto files = list_pngs(hr_dir);
    if (files.empty()) throw ConfigError("no training images in '" + hr_dir + "'");
    Dataset data;
    for (const auto& file : files) {
        ImageU8 hr = read_png(file.string());
        // keep HR aligned to the scale so LR/HR patches correspond exactly
        ImageU8 hr_cropped = hr;
        if (hr.height % scale || hr.width % scale) {
            const int ch = hr.height - hr.height % scale;
            const int cw = hr.width - hr.width % scale;
            hr_cropped.height = ch;
            hr_cropped.width = cw;
            hr_cropped.rgb.resize(std::size_t(ch) * cw * 3);
            for (int y = 0; y < ch; ++y)
                for (int x = 0; x < cw; ++x)
                    for (int c = 0; c < 3; ++c) hr_cropped.at(y, x, c) = hr.at(y, x, c);
        }
        ImageU8 lr;
        if (lr_dir.empty()) {
            lr = degrade_bicubic(hr_cropped, scale);
        } else {
            const fs::path lr_path = fs::path(lr_dir) / file.filename();
            if (!fs::exists(lr_path))
                throw DataError("missing LR image '" + lr_path.string() + "'");
            lr = read_png(lr_path.string());
        }
        data.items.push_back(SamplePair{image_to_tensor(lr), image_to_tensor(hr_cropped)});
    }
    return data;
}

int cmd_train(const RunConfig& rc, const std::string& hr_dir, const std::string& lr_dir,
              const std::string& weights_path, const std::string& trace_path) {
    const ModelConfig cfg = rc.model();
    const TrainSchedule schedule = rc.schedule();
    Dataset data = load_dataset(rc, hr_dir, lr_dir);

    TrainResult result = train(cfg, data, schedule);
    save_model(result.params, weights_path);
    write_text_atomic(trace_path, loss_trace_csv(result, schedule.lr));

    if (!result.losses.empty())
        std::cout << "final loss " << result.losses.back() << " after " << result.losses.size()
                  << " iterations\n";
    std::cout << "weights written to " << weights_path << "\n";
    return 0;
}

int cmd_infer(const RunConfig& rc, const std::string& weights_path, const std::string& input,
              const std::string& output, bool ensemble) {
    const ModelConfig cfg = rc.model();
    ParamStore params = load_model(weights_path, cfg);
    ImageU8 lr = read_png(input);
    Tensor x = image_to_tensor(lr);
    Tensor y = ensemble ? forward_ensemble(params, cfg, x) : forward(params, cfg, x);
    write_png(tensor_to_image(y), output);
    std::cout << "wrote " << output << " (" << y.w() << "x" << y.h() << ")\n";
    return 0;
}

int cmd_eval(const RunConfig& rc, const std::string& weights_path, const std::string& baseline,
             const std::string& hr_dir, const std::string& out_csv) {
    const ModelConfig cfg = rc.model();
    const int crop = rc.border_crop();
    const auto files = list_pngs(hr_dir);
    if (files.empty()) throw ConfigError("no evaluation images in '" + hr_dir + "'");

    ParamStore params;
    const bool use_model = !weights_path.empty();
    if (use_model) params = load_model(weights_path, cfg);

    std::string csv = metric_csv_header(rc, crop);
    csv += "name,psnr_db,ssim\n";
    double psnr_sum = 0.0, ssim_sum = 0.0;
    bool any_inf = false;
    std::size_t count = 0;

    for (const auto& file : files) {
        ImageU8 hr = read_png(file.string());
        const int ch = hr.height - hr.height % cfg.scale;
        const int cw = hr.width - hr.width % cfg.scale;
        ImageU8 hr_ref;
        hr_ref.height = ch;
        hr_ref.width = cw;
        hr_ref.rgb.resize(std::size_t(ch) * cw * 3);
        for (int y = 0; y < ch; ++y)
            for (int x = 0; x < cw; ++x)
                for (int c = 0; c < 3; ++c) hr_ref.at(y, x, c) = hr.at(y, x, c);

        ImageU8 sr;
        if (baseline == "identity") {
            sr = hr_ref;
        } else {
            ImageU8 lr = degrade_bicubic(hr_ref, cfg.scale);
            if (use_model) {
                Tensor y = forward(params, cfg, image_to_tensor(lr));
                sr = tensor_to_image(y);
            } else if (baseline == "bicubic") {
                sr = bicubic_resize(lr, ch, cw, false);
            } else if (baseline == "nearest") {
                sr = nearest_resize(lr, ch, cw);
            } else {
                throw ConfigError("unknown baseline '" + baseline + "' (bicubic|nearest|identity)");
            }
        }

        MetricPair m = evaluate_pair(sr, hr_ref, crop);
        csv += file.filename().string() + "," + format_metric(m.psnr) + "," +
               format_metric(m.ssim) + "\n";
        if (std::isinf(m.psnr)) any_inf = true;
        else psnr_sum += m.psnr;
        ssim_sum += m.ssim;
        ++count;
    }

    const double mean_psnr = any_inf ? std::numeric_limits<double>::infinity()
                                     : psnr_sum / double(count);
    csv += "mean," + format_metric(mean_psnr) + "," + format_metric(ssim_sum / double(count)) +
           "\n";
    write_text_atomic(out_csv, csv);
    std::cout << "mean psnr " << format_metric(mean_psnr) << " dB, mean ssim "
              << format_metric(ssim_sum / double(count)) << " over " << count << " images\n";
    return 0;
}

int cmd_probe_attn(const RunConfig& rc, const std::string& out_path) {
    const ModelConfig cfg = rc.model();
    std::string text;
    char line[160];
    std::snprintf(line, sizeof(line), "%-8s %10s %10s %8s %18s\n", "variant", "width", "height",
                  "dense", "params_per_chan");
    text += line;
    for (AttentionKind kind :
         {AttentionKind::Lka, AttentionKind::Lska, AttentionKind::Lcka, AttentionKind::None}) {
        AttentionVariant v = cfg.attention;
        v.kind = kind;
        ReceptiveField rf = probe_receptive_field(v);
        std::snprintf(line, sizeof(line), "%-8s %10d %10d %8s %18llu\n",
                      attention_kind_name(kind).c_str(), rf.width, rf.height,
                      rf.dense ? "yes" : "no",
                      (unsigned long long)spatial_params_per_channel(v));
        text += line;
    }
    std::snprintf(line, sizeof(line),
                  "# impulse probe of the attention branch, all-ones kernels, k=%d d=%d\n",
                  cfg.attention.base_kernel, cfg.attention.dilation);
    text += line;
    std::cout << text;
    if (!out_path.empty()) write_text_atomic(out_path, text);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"lckasr: lightweight super-resolution with large coordinate kernel attention"};
    app.require_subcommand(1);

    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
    RunConfig defaults_probe;  // key list only

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_file, "flat key=value config file");
        for (const auto& key : defaults_probe.keys()) {
            cmd->add_option_function<std::string>(
                "--" + key,
                [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); },
                "override config key " + key);
        }
    };

    auto* analyze = app.add_subcommand("analyze", "parameter and multi-add report");
    std::string analyze_out = ".";
    analyze->add_option("--out", analyze_out, "output directory");
    add_common(analyze);

    auto* degrade = app.add_subcommand("degrade", "bicubic-degrade a directory of HR PNGs");
    std::string degrade_hr, degrade_out;
    degrade->add_option("--hr", degrade_hr, "HR input directory")->required();
    degrade->add_option("--out", degrade_out, "LR output directory")->required();
    add_common(degrade);

    auto* train_cmd = app.add_subcommand("train", "train from a directory of HR PNGs");
    std::string train_hr, train_lr, train_weights = "lcan.lcw", train_trace = "loss_trace.csv";
    train_cmd->add_option("--hr", train_hr, "HR training directory")->required();
    train_cmd->add_option("--lr-dir", train_lr, "paired LR directory (default: auto-degrade)");
    train_cmd->add_option("--out", train_weights, "weights output path");
    train_cmd->add_option("--trace", train_trace, "loss trace CSV path");
    add_common(train_cmd);

    auto* infer = app.add_subcommand("infer", "super-resolve one PNG");
    std::string infer_weights, infer_in, infer_out = "sr.png";
    bool infer_ensemble = false;
    infer->add_option("--weights", infer_weights, "weights file")->required();
    infer->add_option("--input", infer_in, "LR input PNG")->required();
    infer->add_option("--output", infer_out, "SR output PNG");
    infer->add_flag("--ensemble", infer_ensemble, "average the 8 dihedral transforms");
    add_common(infer);

    auto* eval = app.add_subcommand("eval", "Y-channel PSNR/SSIM over a directory of HR PNGs");
    std::string eval_weights, eval_baseline, eval_hr, eval_out = "metrics.csv";
    eval->add_option("--weights", eval_weights, "weights file");
    eval->add_option("--baseline", eval_baseline, "bicubic|nearest|identity instead of weights");
    eval->add_option("--hr", eval_hr, "HR directory")->required();
    eval->add_option("--out", eval_out, "metrics CSV path");
    add_common(eval);

    auto* probe = app.add_subcommand("probe-attn", "receptive field and cost of each variant");
    std::string probe_out;
    probe->add_option("--out", probe_out, "also write the table to this file");
    add_common(probe);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        RunConfig rc;
        if (!config_file.empty()) rc.load_file(config_file);
        for (const auto& [k, v] : overrides) rc.set(k, v);
        log_resolved(rc);

        if (analyze->parsed()) return cmd_analyze(rc, analyze_out);
        if (degrade->parsed()) return cmd_degrade(rc, degrade_hr, degrade_out);
        if (train_cmd->parsed())
            return cmd_train(rc, train_hr, train_lr, train_weights, train_trace);
        if (infer->parsed())
            return cmd_infer(rc, infer_weights, infer_in, infer_out, infer_ensemble);
        if (eval->parsed()) {
            if (eval_weights.empty() && eval_baseline.empty())
                throw ConfigError("eval needs --weights or --baseline");
            if (!eval_weights.empty() && !eval_baseline.empty())
                throw ConfigError("eval takes --weights or --baseline, not both");
            return cmd_eval(rc, eval_weights, eval_baseline, eval_hr, eval_out);
        }
        if (probe->parsed()) return cmd_probe_attn(rc, probe_out);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace lckasr
