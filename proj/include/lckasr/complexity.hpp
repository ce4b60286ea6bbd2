#pragma once

#include <string>
#include <vector>

#include "lckasr/config.hpp"
#include "lckasr/graph.hpp"

namespace lckasr {

// Per-layer costs for one configuration. Multiply-accumulate counts follow
// the convolution-only convention: element-wise products, activations and the
// sub-pixel rearrangement contribute zero, and every trunk layer runs at the
// LR resolution (output / scale), the reconstruction conv included since it
// precedes the sub-pixel step.
struct ComplexityReport {
    std::vector<LayerRow> rows;
    std::uint64_t total_params = 0;
    std::uint64_t total_macs = 0;
    int out_h = 0, out_w = 0;  // assumed SR output resolution (MACs only)
    std::uint64_t fingerprint = 0;
    std::string config_text;
};

ComplexityReport count_params(const ModelConfig& cfg);
ComplexityReport count_multiadds(const ModelConfig& cfg, int out_h = 720, int out_w = 1280);

// Impulse-response probe of the attention branch with all-ones kernels.
struct ReceptiveField {
    int width = 0;
    int height = 0;
    bool dense = false;
};

ReceptiveField probe_receptive_field(const AttentionVariant& variant);

// Spatial (depth-wise) kernel taps per channel: the decomposition's headline
// cost figure.
std::uint64_t spatial_params_per_channel(const AttentionVariant& variant);

struct VariantRow {
    std::string variant;
    std::uint64_t params = 0;
    std::uint64_t macs = 0;
    double psnr_db = 0.0;  // NaN unless an evaluation run supplied one
};

std::vector<VariantRow> compare_variants(const ModelConfig& base, int out_h = 720,
                                         int out_w = 1280);

std::string complexity_report_text(const ComplexityReport& report);
std::string complexity_report_csv(const ComplexityReport& report);
std::string variants_table_text(const std::vector<VariantRow>& rows);
std::string variants_table_csv(const std::vector<VariantRow>& rows);

}  // namespace lckasr
