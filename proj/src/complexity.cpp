#include "lckasr/complexity.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace lckasr {

namespace {

ComplexityReport walk(const ModelConfig& cfg, int lr_h, int lr_w) {
    cfg.validate();
    ShapeCtx ctx;
    lcan_graph(ctx, Shape4{1, 3, lr_h, lr_w}, cfg);
    ComplexityReport report;
    report.rows = std::move(ctx.rows);
    for (const auto& row : report.rows) {
        report.total_params += row.params;
        report.total_macs += row.macs;
    }
    report.fingerprint = cfg.fingerprint();
    report.config_text = cfg.canonical_text();
    return report;
}

}  // namespace

ComplexityReport count_params(const ModelConfig& cfg) {
    ComplexityReport report = walk(cfg, 48, 48);
    // parameter counting is resolution-independent; drop the MAC columns
    report.total_macs = 0;
    for (auto& row : report.rows) row.macs = 0;
    return report;
}

ComplexityReport count_multiadds(const ModelConfig& cfg, int out_h, int out_w) {
    if (out_h < cfg.scale || out_w < cfg.scale)
        throw ConfigError("count_multiadds: output resolution smaller than the scale");
    ComplexityReport report = walk(cfg, out_h / cfg.scale, out_w / cfg.scale);
    report.out_h = out_h;
    report.out_w = out_w;
    return report;
}

ReceptiveField probe_receptive_field(const AttentionVariant& variant) {
    const int k = variant.base_kernel;
    const int d = variant.dilation;
    const int span = (k - 1) * (1 + d) + 1;  // analytic upper bound per axis
    const int size = 2 * span + 3;
    const int center = size / 2;

    Tensor x(1, 1, size, size);
    x.at(0, 0, center, center) = 1.0f;

    Tensor y = x;
    if (variant.kind != AttentionKind::None) {
        auto ones = [](int kh, int kw) { return Tensor(1, 1, kh, kw, 1.0f); };
        auto dw = [&](const Tensor& in, int kh, int kw, int dil_h, int dil_w) {
            Tensor w = ones(kh, kw);
            return conv2d(in, w, nullptr, depthwise_geom(1, kh, kw, dil_h, dil_w, false));
        };
        switch (variant.kind) {
            case AttentionKind::Lka:
                y = dw(dw(x, k, k, 1, 1), k, k, d, d);
                break;
            case AttentionKind::Lska:
                y = dw(dw(dw(dw(x, 1, k, 1, 1), k, 1, 1, 1), 1, k, 1, d), k, 1, d, 1);
                break;
            case AttentionKind::Lcka:
                y = dw(dw(dw(dw(x, 1, k, 1, 1), 1, k, 1, d), k, 1, 1, 1), k, 1, d, 1);
                break;
            case AttentionKind::None:
                break;
        }
        // the trailing point-wise conv is 1x1 and cannot change the support
    }

    int lo_h = size, hi_h = -1, lo_w = size, hi_w = -1;
    for (int h = 0; h < y.h(); ++h)
        for (int w = 0; w < y.w(); ++w)
            if (std::abs(y.at(0, 0, h, w)) > 1e-6f) {
                lo_h = std::min(lo_h, h);
                hi_h = std::max(hi_h, h);
                lo_w = std::min(lo_w, w);
                hi_w = std::max(hi_w, w);
            }
    ReceptiveField rf;
    if (hi_h < 0) return rf;
    rf.height = hi_h - lo_h + 1;
    rf.width = hi_w - lo_w + 1;
    rf.dense = true;
    for (int h = lo_h; h <= hi_h && rf.dense; ++h)
        for (int w = lo_w; w <= hi_w; ++w)
            if (std::abs(y.at(0, 0, h, w)) <= 1e-6f) {
                rf.dense = false;
                break;
            }
    return rf;
}

std::uint64_t spatial_params_per_channel(const AttentionVariant& variant) {
    const std::uint64_t k = std::uint64_t(variant.base_kernel);
    switch (variant.kind) {
        case AttentionKind::None: return 0;
        case AttentionKind::Lka: return 2 * k * k;
        case AttentionKind::Lska:
        case AttentionKind::Lcka: return 4 * k;
    }
    return 0;
}

std::vector<VariantRow> compare_variants(const ModelConfig& base, int out_h, int out_w) {
    std::vector<VariantRow> rows;
    for (AttentionKind kind :
         {AttentionKind::Lka, AttentionKind::Lska, AttentionKind::Lcka, AttentionKind::None}) {
        ModelConfig cfg = base;
        cfg.attention.kind = kind;
        VariantRow row;
        row.variant = attention_kind_name(kind);
        row.params = count_params(cfg).total_params;
        row.macs = count_multiadds(cfg, out_h, out_w).total_macs;
        row.psnr_db = std::numeric_limits<double>::quiet_NaN();
        rows.push_back(row);
    }
    return rows;
}

namespace {

std::string config_header(const std::string& config_text) {
    std::string out;
    std::size_t start = 0;
    while (start < config_text.size()) {
        std::size_t end = config_text.find('\n', start);
        if (end == std::string::npos) end = config_text.size();
        out += "# config " + config_text.substr(start, end - start) + "\n";
        start = end + 1;
    }
    return out;
}

const char* kMacFooter =
    "# note: multi-adds count convolution MACs only (element-wise products,\n"
    "# activations and sub-pixel rearrangement are free); trunk layers run at\n"
    "# output/scale resolution and the reconstruction conv is counted there too\n"
    "# since it precedes the sub-pixel step.\n"
    "# reference totals for the original LCAN release at x2, 1280x720 output:\n"
    "# 291.6 K params, 68.37 G multi-adds.\n";

}  // namespace

std::string complexity_report_text(const ComplexityReport& report) {
    std::string out = config_header(report.config_text);
    char line[256];
    std::snprintf(line, sizeof(line), "# fingerprint %016llx\n",
                  (unsigned long long)report.fingerprint);
    out += line;
    if (report.out_h > 0) {
        std::snprintf(line, sizeof(line), "# assumed SR output %dx%d\n", report.out_w,
                      report.out_h);
        out += line;
    }
    std::snprintf(line, sizeof(line), "%-28s %-12s %14s %18s\n", "layer", "kind", "params",
                  "macs");
    out += line;
    for (const auto& row : report.rows) {
        std::snprintf(line, sizeof(line), "%-28s %-12s %14llu %18llu\n", row.name.c_str(),
                      row.kind.c_str(), (unsigned long long)row.params,
                      (unsigned long long)row.macs);
        out += line;
    }
    std::snprintf(line, sizeof(line), "%-28s %-12s %14llu %18llu\n", "total", "",
                  (unsigned long long)report.total_params, (unsigned long long)report.total_macs);
    out += line;
    out += kMacFooter;
    return out;
}

std::string complexity_report_csv(const ComplexityReport& report) {
    std::string out = config_header(report.config_text);
    out += "name,kind,params,macs\n";
    char line[256];
    for (const auto& row : report.rows) {
        std::snprintf(line, sizeof(line), "%s,%s,%llu,%llu\n", row.name.c_str(),
                      row.kind.c_str(), (unsigned long long)row.params,
                      (unsigned long long)row.macs);
        out += line;
    }
    std::snprintf(line, sizeof(line), "total,,%llu,%llu\n",
                  (unsigned long long)report.total_params, (unsigned long long)report.total_macs);
    out += line;
    return out;
}

namespace {

std::string format_psnr(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string variants_table_text(const std::vector<VariantRow>& rows) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-8s %14s %18s %10s\n", "variant", "params", "multiadds",
                  "psnr_db");
    out += line;
    for (const auto& row : rows) {
        std::snprintf(line, sizeof(line), "%-8s %14llu %18llu %10s\n", row.variant.c_str(),
                      (unsigned long long)row.params, (unsigned long long)row.macs,
                      format_psnr(row.psnr_db).c_str());
        out += line;
    }
    out += kMacFooter;
    return out;
}

std::string variants_table_csv(const std::vector<VariantRow>& rows) {
    std::string out = "variant,params,multiadds,psnr_db\n";
    char line[256];
    for (const auto& row : rows) {
        std::snprintf(line, sizeof(line), "%s,%llu,%llu,%s\n", row.variant.c_str(),
                      (unsigned long long)row.params, (unsigned long long)row.macs,
                      format_psnr(row.psnr_db).c_str());
        out += line;
    }
    return out;
}

}  // namespace lckasr
