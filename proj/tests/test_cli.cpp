#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lckasr/cli.hpp"
#include "lckasr/image_io.hpp"
#include "lckasr/metrics.hpp"
#include "lckasr/model.hpp"
#include "testutil.hpp"

using namespace lckasr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& child = "") const {
        return child.empty() ? path.string() : (path / child).string();
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

ImageU8 structured(int h, int w, std::uint64_t seed) {
    ImageU8 img;
    img.height = h;
    img.width = w;
    img.rgb.resize(std::size_t(h) * w * 3);
    Rng rng(seed);
    const double fx = 0.2 + rng.next_double() * 0.4;
    const double fy = 0.2 + rng.next_double() * 0.4;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = 128 + 80 * std::sin(fx * x + c) * std::cos(fy * y);
                if (((x / 6) + (y / 6)) % 2 == 0) v = 0.6 * v + 70;
                img.at(y, x, c) = std::uint8_t(std::clamp(v, 0.0, 255.0));
            }
    return img;
}

void write_images(const std::string& dir, int count, int h, int w, std::uint64_t seed) {
    fs::create_directories(dir);
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img%02d.png", i);
        write_png(structured(h, w, seed + i), (fs::path(dir) / name).string());
    }
}

const std::vector<std::string> kTinyModel = {"--channels", "24", "--blocks", "2",
                                             "--scale",    "2",  "--seed",   "9"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
    args.insert(args.end(), kTinyModel.begin(), kTinyModel.end());
    return args;
}

}  // namespace

TEST_CASE("png round trip") {
    TempDir dir("lckasr_png");
    ImageU8 img = structured(13, 9, 1);
    write_png(img, dir.str("a.png"));
    ImageU8 back = read_png(dir.str("a.png"));
    CHECK(back.height == 13);
    CHECK(back.width == 9);
    CHECK(back.rgb == img.rgb);
}

TEST_CASE("probe-attn prints the receptive fields and kernel costs") {
    TempDir dir("lckasr_probe");
    CHECK(run_cli({"probe-attn", "--out", dir.str("probe.txt")}) == 0);
    const std::string text = slurp(dir.str("probe.txt"));
    CHECK(text.find("lcka") != std::string::npos);
    CHECK(text.find("17") != std::string::npos);
    CHECK(text.find("50") != std::string::npos);
    CHECK(text.find("20") != std::string::npos);
}

TEST_CASE("analyze writes the report files") {
    TempDir dir("lckasr_analyze");
    CHECK(run_cli(with_tiny({"analyze", "--out", dir.str()})) == 0);
    for (const char* name : {"complexity.txt", "complexity.csv", "variants.txt", "variants.csv"})
        CHECK(fs::exists(dir.str(name)));
    const std::string csv = slurp(dir.str("variants.csv"));
    CHECK(csv.find("variant,params,multiadds,psnr_db") != std::string::npos);
}

TEST_CASE("attention override changes the spatial-kernel cost in the report") {
    TempDir dir_a("lckasr_an_lka"), dir_b("lckasr_an_lcka");
    CHECK(run_cli(with_tiny({"analyze", "--out", dir_a.str(), "--attention", "lka"})) == 0);
    CHECK(run_cli(with_tiny({"analyze", "--out", dir_b.str(), "--attention", "lcka"})) == 0);
    auto total_of = [](const std::string& csv) {
        const auto pos = csv.find("total,,");
        REQUIRE(pos != std::string::npos);
        return std::stoull(csv.substr(pos + 7));
    };
    CHECK(total_of(slurp(dir_b.str("complexity.csv"))) <
          total_of(slurp(dir_a.str("complexity.csv"))));
}

TEST_CASE("a malformed config key exits 2 naming the key") {
    TempDir dir("lckasr_badcfg");
    {
        std::ofstream out(dir.str("bad.cfg"));
        out << "channels=24\nnot_a_key=1\n";
    }
    CHECK(run_cli({"analyze", "--out", dir.str(), "--config", dir.str("bad.cfg")}) == 2);
    CHECK(run_cli({"analyze", "--definitely-bogus-flag", "1"}) == 2);
}

TEST_CASE("degrade applies the crop rule") {
    TempDir hr("lckasr_deg_hr"), lr("lckasr_deg_lr");
    write_png(structured(17, 17, 2), hr.str("odd.png"));
    CHECK(run_cli({"degrade", "--hr", hr.str(), "--out", lr.str(), "--scale", "4"}) == 0);
    ImageU8 out = read_png(lr.str("odd.png"));
    CHECK(out.height == 4);
    CHECK(out.width == 4);
}

TEST_CASE("degrade of a constant image stays constant") {
    TempDir hr("lckasr_deg2_hr"), lr("lckasr_deg2_lr");
    ImageU8 gray;
    gray.height = gray.width = 16;
    gray.rgb.assign(16 * 16 * 3, 90);
    write_png(gray, hr.str("gray.png"));
    CHECK(run_cli({"degrade", "--hr", hr.str(), "--out", lr.str(), "--scale", "2"}) == 0);
    ImageU8 out = read_png(lr.str("gray.png"));
    for (auto v : out.rgb) CHECK(int(v) == 90);
}

TEST_CASE("train with zero iterations writes the initialization") {
    TempDir data("lckasr_tr0_data"), out("lckasr_tr0_out");
    write_images(data.str(), 2, 32, 32, 30);
    CHECK(run_cli(with_tiny({"train", "--hr", data.str(), "--out", out.str("w.lcw"), "--trace",
                             out.str("loss.csv"), "--iters", "0", "--batch", "2", "--patch",
                             "8"})) == 0);

    ModelConfig cfg;
    cfg.channels = 24;
    cfg.blocks = 2;
    cfg.scale = 2;
    cfg.seed = 9;
    ParamStore loaded = load_model(out.str("w.lcw"), cfg);
    ParamStore init = build_model(cfg);
    for (std::size_t i = 0; i < init.count(); ++i)
        CHECK(loaded.entries()[i].tensor.vec() == init.entries()[i].tensor.vec());
    CHECK(slurp(out.str("loss.csv")).rfind("iteration,loss,learning_rate,seconds_elapsed", 0) ==
          0);
}

TEST_CASE("training twice with one seed gives byte-identical weights") {
    TempDir data("lckasr_tr_data"), out("lckasr_tr_out");
    write_images(data.str(), 2, 24, 24, 31);
    const std::vector<std::string> base = with_tiny({"train", "--hr", data.str(), "--iters", "3",
                                                     "--batch", "2", "--patch", "8"});
    auto run_to = [&](const std::string& w) {
        auto args = base;
        args.insert(args.end(), {"--out", w, "--trace", out.str("t.csv")});
        return run_cli(args);
    };
    CHECK(run_to(out.str("a.lcw")) == 0);
    CHECK(run_to(out.str("b.lcw")) == 0);
    CHECK(slurp(out.str("a.lcw")) == slurp(out.str("b.lcw")));
}

TEST_CASE("train on an empty directory exits 2") {
    TempDir data("lckasr_tr_empty"), out("lckasr_tr_eout");
    CHECK(run_cli(with_tiny({"train", "--hr", data.str(), "--out", out.str("w.lcw")})) == 2);
}

TEST_CASE("infer produces a scale-by-scale PNG, deterministically") {
    TempDir data("lckasr_inf_data"), out("lckasr_inf_out");
    write_images(data.str(), 1, 24, 24, 32);
    write_png(structured(8, 8, 33), data.str("lr.png"));
    REQUIRE(run_cli(with_tiny({"train", "--hr", data.str(), "--iters", "0", "--batch", "1",
                               "--patch", "8", "--out", out.str("w.lcw"), "--trace",
                               out.str("t.csv")})) == 0);

    auto infer = [&](const std::string& result, bool ensemble) {
        std::vector<std::string> args = with_tiny({"infer", "--weights", out.str("w.lcw"),
                                                   "--input", data.str("lr.png"), "--output",
                                                   result});
        if (ensemble) args.push_back("--ensemble");
        return run_cli(args);
    };
    CHECK(infer(out.str("sr1.png"), false) == 0);
    CHECK(infer(out.str("sr2.png"), false) == 0);
    ImageU8 sr = read_png(out.str("sr1.png"));
    CHECK(sr.height == 16);
    CHECK(sr.width == 16);
    CHECK(slurp(out.str("sr1.png")) == slurp(out.str("sr2.png")));

    CHECK(infer(out.str("sr_ens.png"), true) == 0);
    CHECK(read_png(out.str("sr_ens.png")).height == 16);
}

TEST_CASE("infer with a mismatched config exits 2") {
    TempDir data("lckasr_mm_data"), out("lckasr_mm_out");
    write_images(data.str(), 1, 24, 24, 34);
    REQUIRE(run_cli(with_tiny({"train", "--hr", data.str(), "--iters", "0", "--batch", "1",
                               "--patch", "8", "--out", out.str("w.lcw"), "--trace",
                               out.str("t.csv")})) == 0);
    write_png(structured(8, 8, 35), data.str("lr.png"));
    // same sizes but a different attention variant: fingerprints differ
    std::vector<std::string> args = with_tiny({"infer", "--weights", out.str("w.lcw"), "--input",
                                               data.str("lr.png"), "--output", out.str("x.png"),
                                               "--attention", "lka"});
    CHECK(run_cli(args) == 2);
}

TEST_CASE("eval against identity scores inf psnr and unit ssim") {
    TempDir data("lckasr_ev_data"), out("lckasr_ev_out");
    write_images(data.str(), 2, 32, 32, 36);
    CHECK(run_cli(with_tiny({"eval", "--baseline", "identity", "--hr", data.str(), "--out",
                             out.str("m.csv")})) == 0);
    const std::string csv = slurp(out.str("m.csv"));
    CHECK(csv.find("name,psnr_db,ssim\n") != std::string::npos);
    CHECK(csv.find("img00.png,inf,1.000000") != std::string::npos);
    CHECK(csv.find("mean,inf,1.000000") != std::string::npos);
}

TEST_CASE("eval: bicubic baseline beats nearest on structured content") {
    TempDir data("lckasr_ev2_data"), out("lckasr_ev2_out");
    write_images(data.str(), 2, 48, 48, 37);
    auto mean_psnr = [&](const std::string& baseline, const std::string& csv_path) {
        REQUIRE(run_cli(with_tiny({"eval", "--baseline", baseline, "--hr", data.str(), "--out",
                                   csv_path})) == 0);
        const std::string csv = slurp(csv_path);
        const auto pos = csv.find("mean,");
        REQUIRE(pos != std::string::npos);
        return std::stod(csv.substr(pos + 5));
    };
    const double cubic = mean_psnr("bicubic", out.str("c.csv"));
    const double nearest = mean_psnr("nearest", out.str("n.csv"));
    CHECK(cubic > nearest);
}

TEST_CASE("eval without images exits 2, without a source exits 2") {
    TempDir data("lckasr_ev3_data"), out("lckasr_ev3_out");
    CHECK(run_cli(with_tiny({"eval", "--baseline", "identity", "--hr", data.str(), "--out",
                             out.str("m.csv")})) == 2);
    write_images(data.str(), 1, 24, 24, 38);
    CHECK(run_cli(with_tiny({"eval", "--hr", data.str(), "--out", out.str("m.csv")})) == 2);
}
