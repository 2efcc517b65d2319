#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <cmath>

#include "sedbox/cli.hpp"
#include "sedbox/decode.hpp"
#include "sedbox/prediction_io.hpp"
#include "sedbox/rng.hpp"
#include "sedbox/selection_table.hpp"
#include "sedbox/wav.hpp"

using namespace sedbox;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("sedbox_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

const TempDir& scratch() {
    static TempDir dir;
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// Spiky predictions with a couple of events, shared by decode/fuse tests.
std::string make_prediction_file(const std::string& name, Direction direction) {
    FramePredictions preds;
    preds.direction = direction;
    preds.frame_rate = 50.0;
    preds.p_det = Eigen::ArrayXd::Zero(500);
    preds.dur_reg = Eigen::ArrayXd::Zero(500);
    preds.class_logits = Eigen::MatrixXd::Zero(500, 1);
    const std::vector<std::pair<Eigen::Index, double>> spikes{{50, 0.9}, {200, 0.7}};
    for (const auto& [frame, p] : spikes) {
        preds.p_det[frame] = p;
        preds.dur_reg[frame] = 0.2;
    }
    const std::string path = scratch().file(name);
    write_predictions(preds, ClassVocab({"zf"}), path);
    return path;
}

}  // namespace

TEST_CASE("unknown subcommands and flags exit with code 1") {
    CHECK(run_cli({"frobnicate"}) == 1);
    CHECK(run_cli({}) == 1);
    CHECK(run_cli({"decode", "--no-such-flag"}) == 1);
}

TEST_CASE("help exits cleanly") {
    CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("missing input files exit with code 2") {
    CHECK(run_cli({"decode", "--preds", scratch().file("absent.csv"), "--out",
                   scratch().file("out.txt")}) == 2);
}

TEST_CASE("invalid rows exit with code 1") {
    const std::string bad = scratch().file("bad.csv");
    write_text(bad,
               "frame_rate,50.0\ndirection,forward\nclasses,zf\n"
               "frame,p_det,dur_reg,logit_zf\n"
               "0,1.5,0.1,0.0\n");
    CHECK(run_cli({"decode", "--preds", bad, "--out", scratch().file("out.txt")}) == 1);
}

TEST_CASE("decode writes a selection table with scores") {
    const std::string preds = make_prediction_file("fwd.csv", Direction::forward);
    const std::string out = scratch().file("decoded.txt");
    CHECK(run_cli({"decode", "--preds", preds, "--out", out}) == 0);
    const EventSet events = read_selection_table(out);
    REQUIRE(events.boxes.size() == 2);
    CHECK(events.boxes[0].onset == doctest::Approx(1.0));
    CHECK(events.boxes[0].score == doctest::Approx(0.9));
    CHECK(events.boxes[1].onset == doctest::Approx(4.0));
}

TEST_CASE("decode respects the threshold flag") {
    const std::string preds = make_prediction_file("fwd_thresh.csv", Direction::forward);
    const std::string out = scratch().file("decoded_thresh.txt");
    CHECK(run_cli({"decode", "--preds", preds, "--out", out, "--threshold", "0.8"}) == 0);
    CHECK(read_selection_table(out).boxes.size() == 1);
}

TEST_CASE("config files mirror flags and the command line wins") {
    const std::string preds = make_prediction_file("fwd_config.csv", Direction::forward);
    const std::string config = scratch().file("decode.conf");
    write_text(config, "threshold=0.8\n");

    const std::string from_config = scratch().file("decoded_config.txt");
    CHECK(run_cli({"decode", "--preds", preds, "--out", from_config, "--config",
                   config}) == 0);
    CHECK(read_selection_table(from_config).boxes.size() == 1);

    const std::string overridden = scratch().file("decoded_override.txt");
    CHECK(run_cli({"decode", "--preds", preds, "--out", overridden, "--config", config,
                   "--threshold", "0.1"}) == 0);
    CHECK(read_selection_table(overridden).boxes.size() == 2);
}

TEST_CASE("fuse honors the unmatched policy flag") {
    const std::string fwd = make_prediction_file("policy_fwd.csv", Direction::forward);

    // Backward spikes nowhere near the forward ones.
    FramePredictions preds;
    preds.direction = Direction::backward;
    preds.frame_rate = 50.0;
    preds.p_det = Eigen::ArrayXd::Zero(500);
    preds.dur_reg = Eigen::ArrayXd::Zero(500);
    preds.class_logits = Eigen::MatrixXd::Zero(500, 1);
    preds.p_det[400] = 0.5;
    preds.dur_reg[400] = 0.2;
    const std::string bwd = scratch().file("policy_bwd.csv");
    write_predictions(preds, ClassVocab({"zf"}), bwd);

    const std::string out = scratch().file("policy_out.txt");
    CHECK(run_cli({"fuse", "--forward", fwd, "--backward", bwd, "--out", out,
                   "--unmatched", "drop"}) == 0);
    CHECK(read_selection_table(out).boxes.empty());

    CHECK(run_cli({"fuse", "--forward", fwd, "--backward", bwd, "--out", out,
                   "--unmatched", "keep-both"}) == 0);
    CHECK(read_selection_table(out).boxes.size() == 3);

    CHECK(run_cli({"fuse", "--forward", fwd, "--backward", bwd, "--out", out,
                   "--unmatched", "sideways"}) == 1);
}

TEST_CASE("fuse with identical files equals decode on the forward file") {
    const std::string preds = make_prediction_file("both.csv", Direction::forward);
    const std::string decoded = scratch().file("decoded_one.txt");
    const std::string fused = scratch().file("fused_one.txt");
    CHECK(run_cli({"decode", "--preds", preds, "--out", decoded}) == 0);
    CHECK(run_cli({"fuse", "--forward", preds, "--backward", preds, "--out", fused}) == 0);
    CHECK(slurp(decoded) == slurp(fused));
}

TEST_CASE("fuse merges forward and backward spikes") {
    const std::string fwd = make_prediction_file("fuse_fwd.csv", Direction::forward);

    // Backward file: offsets at onset + duration.
    FramePredictions preds;
    preds.direction = Direction::backward;
    preds.frame_rate = 50.0;
    preds.p_det = Eigen::ArrayXd::Zero(500);
    preds.dur_reg = Eigen::ArrayXd::Zero(500);
    preds.class_logits = Eigen::MatrixXd::Zero(500, 1);
    preds.p_det[60] = 0.8;   // offset 1.2 s, onset 1.0 s
    preds.dur_reg[60] = 0.2;
    preds.p_det[210] = 0.6;  // offset 4.2 s, onset 4.0 s
    preds.dur_reg[210] = 0.2;
    const std::string bwd = scratch().file("fuse_bwd.csv");
    write_predictions(preds, ClassVocab({"zf"}), bwd);

    const std::string fused = scratch().file("fused_two.txt");
    CHECK(run_cli({"fuse", "--forward", fwd, "--backward", bwd, "--out", fused}) == 0);
    const EventSet events = read_selection_table(fused);
    REQUIRE(events.boxes.size() == 2);
    CHECK(events.boxes[0].onset == doctest::Approx(1.0));
    CHECK(events.boxes[0].score == doctest::Approx(0.85));
}

TEST_CASE("eval reports mAP one when predictions equal truth") {
    EventSet truth;
    truth.vocab = ClassVocab({"zf"});
    truth.clip_duration = 60.0;
    truth.boxes = {Box{1.0, 0.2, 0, 1.0}, Box{5.0, 0.3, 0, 1.0}};
    const std::string table = scratch().file("truth_eval.txt");
    write_selection_table(truth, table);

    const std::string report = scratch().file("report.csv");
    CHECK(run_cli({"eval", "--preds", table, "--truth", table, "--out", report}) == 0);
    const std::string csv = slurp(report);
    CHECK(csv.find("0.500000,mAP,1.000000") != std::string::npos);
    CHECK(csv.find("0.800000,mAP,1.000000") != std::string::npos);
}

TEST_CASE("eval writes PR curves on request") {
    EventSet truth;
    truth.vocab = ClassVocab({"zf"});
    truth.clip_duration = 60.0;
    truth.boxes = {Box{1.0, 0.2, 0, 1.0}};
    const std::string table = scratch().file("truth_pr.txt");
    write_selection_table(truth, table);
    const std::string report = scratch().file("report_pr.csv");
    const std::string curves = scratch().file("curves.csv");
    CHECK(run_cli({"eval", "--preds", table, "--truth", table, "--out", report,
                   "--pr-out", curves, "--iou", "0.5", "--matching", "maxcard"}) == 0);
    CHECK(slurp(curves).find("0.500000,zf,1.000000,1.000000,1.000000") !=
          std::string::npos);
}

TEST_CASE("synth is byte-deterministic for a fixed seed") {
    const std::string dir_a = scratch().file("synth_a");
    const std::string dir_b = scratch().file("synth_b");
    for (const auto& dir : {dir_a, dir_b}) {
        CHECK(run_cli({"synth", "--out-dir", dir, "--R", "0", "--n", "10", "--seed",
                       "7"}) == 0);
    }
    CHECK(slurp(dir_a + "/recording_000.txt") == slurp(dir_b + "/recording_000.txt"));
    CHECK(slurp(dir_a + "/manifest.csv") == slurp(dir_b + "/manifest.csv"));

    const std::string dir_c = scratch().file("synth_c");
    CHECK(run_cli({"synth", "--out-dir", dir_c, "--R", "0", "--n", "10", "--seed",
                   "8"}) == 0);
    CHECK(slurp(dir_a + "/recording_000.txt") != slurp(dir_c + "/recording_000.txt"));
}

TEST_CASE("synth honors n-range and duration-range draws") {
    const std::string dir = scratch().file("synth_ranges");
    CHECK(run_cli({"synth", "--out-dir", dir, "--R", "0", "--recordings", "2", "--n-range",
                   "40:60", "--duration-range", "0.05:0.15", "--seed", "3"}) == 0);
    const EventSet events = read_selection_table(dir + "/recording_000.txt");
    CHECK(events.boxes.size() >= 40);
    CHECK(events.boxes.size() <= 60);
    for (const Box& box : events.boxes) {
        CHECK(box.duration >= 0.05);
        CHECK(box.duration <= 0.15);
    }
}

TEST_CASE("synth mixes call audio into a background track") {
    Rng rng(83);
    PcmClip background;
    background.sample_rate = 16000.0;
    background.samples.resize(16000 * 10);
    for (Eigen::Index i = 0; i < background.samples.size(); ++i) {
        background.samples[i] = rng.uniform(-0.05, 0.05);
    }
    const std::string bg_path = scratch().file("bg.wav");
    write_wav(background, bg_path);

    const std::string call_dir = scratch().file("calls");
    fs::create_directories(call_dir);
    for (int k = 0; k < 3; ++k) {
        PcmClip call;
        call.sample_rate = 16000.0;
        call.samples.resize(1600 + 400 * k);
        for (Eigen::Index i = 0; i < call.samples.size(); ++i) {
            call.samples[i] = rng.uniform(-0.4, 0.4);
        }
        write_wav(call, call_dir + "/call_" + std::to_string(k) + ".wav");
    }

    const std::string dir_a = scratch().file("synth_audio_a");
    const std::string dir_b = scratch().file("synth_audio_b");
    for (const auto& dir : {dir_a, dir_b}) {
        CHECK(run_cli({"synth", "--out-dir", dir, "--R", "0", "--n", "8",
                       "--clip-duration", "10", "--audio-dir", call_dir, "--background",
                       bg_path, "--seed", "21"}) == 0);
    }

    const PcmClip mixture = read_wav(dir_a + "/recording_000.wav");
    CHECK(mixture.samples.size() == 16000 * 10);
    CHECK(!(mixture.samples == read_wav(bg_path).samples.head(160000)).all());
    CHECK(slurp(dir_a + "/recording_000.wav") == slurp(dir_b + "/recording_000.wav"));

    // Annotation durations are the call clip durations.
    const EventSet events = read_selection_table(dir_a + "/recording_000.txt");
    REQUIRE(events.boxes.size() == 8);
    for (const Box& box : events.boxes) {
        const double samples = box.duration * 16000.0;
        const bool known = std::abs(samples - 1600.0) < 1e-6 ||
                           std::abs(samples - 2000.0) < 1e-6 ||
                           std::abs(samples - 2400.0) < 1e-6;
        CHECK(known);
    }
}

TEST_CASE("synth reports unreachable targets as a validation failure") {
    const std::string dir = scratch().file("synth_fail");
    CHECK(run_cli({"synth", "--out-dir", dir, "--R", "0.2", "--n", "19", "--seed",
                   "1"}) == 1);
}

TEST_CASE("stats reproduces the reference table and statistic") {
    // Uses the checked-in copy of the per-file overlap counts.
    const std::string out = scratch().file("stats_out.csv");
    CHECK(run_cli({"stats", "--input", SEDBOX_DATA_DIR "/overlap_counts.csv", "--out",
                   out}) == 0);
    const std::string csv = slurp(out);
    CHECK(csv.find("file,n,d,B,expected,observed,difference") != std::string::npos);
    CHECK(csv.find("\n0,106,0.190000,8,") != std::string::npos);

    CHECK(run_cli({"stats", "--input", SEDBOX_DATA_DIR "/overlap_counts.csv", "--out", out,
                   "--t-denominator", "standard"}) == 0);
}

TEST_CASE("stats accepts duration lists in place of densities") {
    const std::string input = scratch().file("stats_durations.csv");
    write_text(input,
               "file,n,d,B,observed\n"
               "a,3,0.5;0.5;0.5,4,1\n"
               "b,3,0.25,4,1\n");
    const std::string out = scratch().file("stats_durations_out.csv");
    CHECK(run_cli({"stats", "--input", input, "--out", out, "--window", "6"}) == 0);
    const std::string csv = slurp(out);
    // 0.5*3/6 = 0.25 density either way, so both rows agree.
    CHECK(csv.find("a,3,0.250000,4,") != std::string::npos);
    CHECK(csv.find("b,3,0.250000,4,") != std::string::npos);
}

TEST_CASE("losscheck passes on consistent inputs") {
    EventSet truth;
    truth.vocab = ClassVocab({"zf"});
    truth.clip_duration = 10.0;
    truth.boxes = {Box{1.0, 0.2, 0, 1.0}, Box{3.5, 0.4, 0, 1.0}};
    const std::string table = scratch().file("losscheck_truth.txt");
    write_selection_table(truth, table);

    Rng rng(81);
    FramePredictions preds;
    preds.frame_rate = 50.0;
    preds.p_det.resize(500);
    preds.dur_reg.resize(500);
    preds.class_logits.resize(500, 1);
    for (Eigen::Index i = 0; i < 500; ++i) {
        preds.p_det[i] = rng.uniform(0.05, 0.95);
        preds.dur_reg[i] = rng.uniform(0.05, 0.5);
        preds.class_logits(i, 0) = rng.uniform(-2.0, 2.0);
    }
    const std::string pred_path = scratch().file("losscheck_preds.csv");
    write_predictions(preds, truth.vocab, pred_path);

    const std::string targets = scratch().file("losscheck_targets.csv");
    CHECK(run_cli({"losscheck", "--preds", pred_path, "--truth", table, "--dump-targets",
                   targets}) == 0);
    const std::string dumped = slurp(targets);
    CHECK(dumped.find("frame,p_target,is_onset,dur_target,class_id") != std::string::npos);
    CHECK(dumped.find("50,1.000000000,1,0.200000000,0") != std::string::npos);
}
