#include "lckasr/run_config.hpp"

#include <cstdlib>
#include <fstream>

namespace lckasr {

namespace {

const std::map<std::string, std::string> kDefaults = {
    // architecture
    {"attention", "lcka"},
    {"kernel", "5"},
    {"dilation", "3"},
    {"channels", "48"},
    {"blocks", "8"},
    {"replication", "3"},
    {"scale", "4"},
    {"distill_ratio", "1/2"},
    {"bias", "1"},
    {"mbsconv", "1"},
    {"seed", "0"},
    // training
    {"iters", "1000000"},
    {"batch", "64"},
    {"patch", "48"},
    {"lr", "5e-3"},
    {"ema", "0.999"},
    {"weight_decay", "0"},
    {"eps", "1e-8"},
    {"augment", "0"},
    // evaluation / analysis
    {"border_crop", "auto"},
    {"out_h", "720"},
    {"out_w", "1280"},
};

long parse_int(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': '" + value + "' is not an integer");
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "0" || value == "false") return false;
    if (value == "1" || value == "true") return true;
    throw ConfigError("config key '" + key + "': '" + value + "' is not a boolean (0/1)");
}

}  // namespace

RunConfig::RunConfig() : values_(kDefaults) {}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        const auto eq = line.find('=', start);
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        set(line.substr(start, eq - start), line.substr(eq + 1));
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!kDefaults.count(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

ModelConfig RunConfig::model() const {
    ModelConfig cfg;
    cfg.scale = int(parse_int("scale", get("scale")));
    cfg.channels = int(parse_int("channels", get("channels")));
    cfg.blocks = int(parse_int("blocks", get("blocks")));
    cfg.replication = int(parse_int("replication", get("replication")));
    cfg.attention.kind = attention_kind_from_name(get("attention"));
    cfg.attention.base_kernel = int(parse_int("kernel", get("kernel")));
    cfg.attention.dilation = int(parse_int("dilation", get("dilation")));
    const std::string ratio = get("distill_ratio");
    const auto slash = ratio.find('/');
    if (slash == std::string::npos) {
        cfg.distill_num = int(parse_int("distill_ratio", ratio));
        cfg.distill_den = 1;
    } else {
        cfg.distill_num = int(parse_int("distill_ratio", ratio.substr(0, slash)));
        cfg.distill_den = int(parse_int("distill_ratio", ratio.substr(slash + 1)));
    }
    cfg.bias = parse_bool("bias", get("bias"));
    cfg.mbsconv = parse_bool("mbsconv", get("mbsconv"));
    cfg.seed = std::uint64_t(parse_int("seed", get("seed")));
    cfg.validate();
    return cfg;
}

TrainSchedule RunConfig::schedule() const {
    TrainSchedule s;
    s.iters = int(parse_int("iters", get("iters")));
    s.batch = int(parse_int("batch", get("batch")));
    s.patch = int(parse_int("patch", get("patch")));
    s.lr = parse_double("lr", get("lr"));
    s.ema_decay = parse_double("ema", get("ema"));
    s.weight_decay = parse_double("weight_decay", get("weight_decay"));
    s.eps = parse_double("eps", get("eps"));
    s.augment = parse_bool("augment", get("augment"));
    if (s.iters < 0) throw ConfigError("config key 'iters' must be non-negative");
    return s;
}

int RunConfig::border_crop() const {
    const std::string& v = get("border_crop");
    if (v == "auto") return int(parse_int("scale", get("scale")));
    const int crop = int(parse_int("border_crop", v));
    if (crop < 0) throw ConfigError("config key 'border_crop' must be non-negative");
    return crop;
}

int RunConfig::out_h() const { return int(parse_int("out_h", get("out_h"))); }
int RunConfig::out_w() const { return int(parse_int("out_w", get("out_w"))); }

std::string RunConfig::resolved_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

std::vector<std::string> RunConfig::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : values_) out.push_back(k);
    return out;
}

}  // namespace lckasr
