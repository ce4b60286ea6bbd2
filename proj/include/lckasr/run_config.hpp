#pragma once

#include <map>
#include <string>
#include <vector>

#include "lckasr/config.hpp"
#include "lckasr/train.hpp"

namespace lckasr {

// Flat key=value configuration: defaults, then an optional file, then
// command-line overrides. Unknown keys are rejected. The sorted resolved text
// is what every report logs.
class RunConfig {
public:
    RunConfig();

    // '#' starts a comment, blank lines ignored.
    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;

    ModelConfig model() const;
    TrainSchedule schedule() const;
    int border_crop() const;  // resolves "auto" to the scale
    int out_h() const;
    int out_w() const;

    std::string resolved_text() const;
    std::vector<std::string> keys() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace lckasr
