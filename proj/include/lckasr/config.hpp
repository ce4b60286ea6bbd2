#pragma once

#include <cstdint>
#include <string>

#include "lckasr/common.hpp"

namespace lckasr {

enum class AttentionKind { None, Lka, Lska, Lcka };

std::string attention_kind_name(AttentionKind k);
AttentionKind attention_kind_from_name(const std::string& name);

struct AttentionVariant {
    AttentionKind kind = AttentionKind::Lcka;
    int base_kernel = 5;
    int dilation = 3;
};

// All architecture hyperparameters. The canonical text (sorted key=value
// lines over the architecture fields) feeds the weight-file fingerprint.
struct ModelConfig {
    int scale = 4;
    int channels = 48;        // trunk width C
    int blocks = 8;           // MARB count M
    int replication = 3;      // input replication n
    AttentionVariant attention{};
    int distill_num = 1;      // distill ratio as a rational, default 1/2
    int distill_den = 2;
    bool bias = true;
    bool mbsconv = true;      // false swaps every MBSConv for the plain BSConv block
    std::uint64_t seed = 0;

    int distill_channels() const { return channels * distill_num / distill_den; }

    void validate() const;
    std::string canonical_text() const;
    std::uint64_t fingerprint() const { return fnv1a64(canonical_text()); }
};

inline std::string attention_kind_name(AttentionKind k) {
    switch (k) {
        case AttentionKind::None: return "none";
        case AttentionKind::Lka: return "lka";
        case AttentionKind::Lska: return "lska";
        case AttentionKind::Lcka: return "lcka";
    }
    return "none";
}

inline AttentionKind attention_kind_from_name(const std::string& name) {
    if (name == "none") return AttentionKind::None;
    if (name == "lka") return AttentionKind::Lka;
    if (name == "lska") return AttentionKind::Lska;
    if (name == "lcka") return AttentionKind::Lcka;
    throw ConfigError("unknown attention variant '" + name + "' (none|lka|lska|lcka)");
}

inline void ModelConfig::validate() const {
    if (scale < 1) throw ConfigError("config: scale must satisfy s >= 1");
    if (channels < 3) throw ConfigError("config: channels must be at least 3");
    if (mbsconv && channels % 3 != 0)
        throw ConfigError("config: C divisible by 3 is required for the multi-scale split, got " +
                          std::to_string(channels));
    if (blocks < 1) throw ConfigError("config: block count must be positive");
    if (replication < 1) throw ConfigError("config: replication must be positive");
    if (distill_num < 1 || distill_den < 1)
        throw ConfigError("config: distill ratio must be positive");
    if ((channels * distill_num) % distill_den != 0)
        throw ConfigError("config: C * distill_ratio must be a whole number, got " +
                          std::to_string(channels) + " * " + std::to_string(distill_num) + "/" +
                          std::to_string(distill_den));
    if (attention.base_kernel < 1 || attention.base_kernel % 2 == 0)
        throw ConfigError("config: attention kernel must be odd and positive, got " +
                          std::to_string(attention.base_kernel));
    if (attention.dilation < 1) throw ConfigError("config: attention dilation must be positive");
}

inline std::string ModelConfig::canonical_text() const {
    std::string s;
    s += "attention=" + attention_kind_name(attention.kind) + "\n";
    s += "bias=" + std::to_string(int(bias)) + "\n";
    s += "blocks=" + std::to_string(blocks) + "\n";
    s += "channels=" + std::to_string(channels) + "\n";
    s += "dilation=" + std::to_string(attention.dilation) + "\n";
    s += "distill_ratio=" + std::to_string(distill_num) + "/" + std::to_string(distill_den) + "\n";
    s += "kernel=" + std::to_string(attention.base_kernel) + "\n";
    s += "mbsconv=" + std::to_string(int(mbsconv)) + "\n";
    s += "replication=" + std::to_string(replication) + "\n";
    s += "scale=" + std::to_string(scale) + "\n";
    return s;
}

}  // namespace lckasr
