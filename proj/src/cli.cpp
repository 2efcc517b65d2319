#include "sedbox/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sedbox/decode.hpp"
#include "sedbox/errors.hpp"
#include "sedbox/evaluation.hpp"
#include "sedbox/loss.hpp"
#include "sedbox/matching.hpp"
#include "sedbox/prediction_io.hpp"
#include "sedbox/selection_table.hpp"
#include "sedbox/stats.hpp"
#include "sedbox/synth.hpp"
#include "sedbox/wav.hpp"
#include "text_util.hpp"

namespace sedbox {

namespace {

namespace fs = std::filesystem;
using detail::format_fixed;
using detail::parse_double;
using detail::parse_long;
using detail::split;
using detail::trim;

// Parallel map over recordings; each worker owns its own slot, results are
// consumed in index order afterwards. The first exception wins and is
// rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) {
                    return;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    next.store(count);
                    return;
                }
            }
        });
    }
    for (auto& thread : pool) {
        thread.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

EventSet decode_to_events(const PredictionFile& file, const DecodeConfig& cfg,
                          bool apply_nms) {
    std::vector<Box> boxes = boxes_from_predictions(file.predictions, cfg);
    if (apply_nms) {
        boxes = soft_nms(std::move(boxes), cfg);
    }
    EventSet events;
    events.vocab = file.vocab;
    events.boxes = std::move(boxes);
    double clip = static_cast<double>(file.predictions.frames()) / file.predictions.frame_rate;
    for (const Box& box : events.boxes) {
        clip = std::max(clip, box.offset());
    }
    events.clip_duration = clip;
    events.normalize();
    return events;
}

// ---------------------------------------------------------------- decode

struct DecodeArgs {
    std::string preds;
    std::string out;
    double threshold = 0.01;
    double sigma = 0.5;
    double score_floor = 0.005;
    bool no_nms = false;
};

int cmd_decode(const DecodeArgs& args) {
    DecodeConfig cfg;
    cfg.detection_threshold = args.threshold;
    cfg.softnms_sigma = args.sigma;
    cfg.softnms_score_floor = args.score_floor;

    const PredictionFile file = read_predictions(args.preds);
    const EventSet events = decode_to_events(file, cfg, !args.no_nms);
    write_selection_table(events, args.out);
    std::cout << "decoded " << events.boxes.size() << " events to " << args.out << '\n';
    return 0;
}

// ------------------------------------------------------------------ fuse

struct FuseArgs {
    std::string forward;
    std::string backward;
    std::string out;
    double threshold = 0.01;
    double sigma = 0.5;
    double score_floor = 0.005;
    double fusion_iou = 0.5;
    UnmatchedPolicy unmatched = UnmatchedPolicy::keep_forward;
};

int cmd_fuse(const FuseArgs& args) {
    DecodeConfig cfg;
    cfg.detection_threshold = args.threshold;
    cfg.softnms_sigma = args.sigma;
    cfg.softnms_score_floor = args.score_floor;
    cfg.fusion_iou_threshold = args.fusion_iou;
    cfg.unmatched_policy = args.unmatched;

    const PredictionFile fwd = read_predictions(args.forward);
    const PredictionFile bwd = read_predictions(args.backward);
    if (!(fwd.vocab == bwd.vocab)) {
        throw ValidationError("forward and backward files disagree on classes");
    }

    const std::vector<Box> forward_boxes = boxes_from_predictions(fwd.predictions, cfg);
    const std::vector<Box> backward_boxes = boxes_from_predictions(bwd.predictions, cfg);
    std::size_t dropped = 0;
    std::vector<Box> fused = fuse_bidirectional(forward_boxes, backward_boxes, cfg, &dropped);

    EventSet events;
    events.vocab = fwd.vocab;
    events.boxes = std::move(fused);
    double clip = static_cast<double>(fwd.predictions.frames()) / fwd.predictions.frame_rate;
    for (const Box& box : events.boxes) {
        clip = std::max(clip, box.offset());
    }
    events.clip_duration = clip;
    events.normalize();
    write_selection_table(events, args.out);

    std::cout << "fused " << forward_boxes.size() << " forward and "
              << backward_boxes.size() << " backward boxes into " << events.boxes.size()
              << " events (" << dropped << " degenerate dropped) to " << args.out << '\n';
    return 0;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
    std::vector<std::string> preds;
    std::vector<std::string> truths;
    std::string out;
    std::string pr_out;
    std::vector<double> ious{0.5, 0.8};
    int points = 1001;
    MatchingMode matching = MatchingMode::greedy_by_score;
    ApInterpolation interpolation = ApInterpolation::recall_levels;
};

std::vector<EventSet> read_tables_with_vocab(const std::vector<std::string>& paths,
                                             const ClassVocab& vocab) {
    std::vector<EventSet> sets(paths.size());
    parallel_for(paths.size(), [&](std::size_t i) {
        sets[i] = read_selection_table(paths[i], vocab);
    });
    return sets;
}

int cmd_eval(const EvalArgs& args) {
    if (args.preds.size() != args.truths.size()) {
        throw ValidationError("got " + std::to_string(args.preds.size()) +
                              " prediction tables and " + std::to_string(args.truths.size()) +
                              " truth tables; counts must match");
    }
    std::vector<std::string> pred_paths = args.preds;
    std::vector<std::string> truth_paths = args.truths;
    std::sort(pred_paths.begin(), pred_paths.end());
    std::sort(truth_paths.begin(), truth_paths.end());

    // Union vocabulary over every table, so predictions and truths share ids.
    std::set<std::string> names;
    std::vector<std::string> all_paths = pred_paths;
    all_paths.insert(all_paths.end(), truth_paths.begin(), truth_paths.end());
    std::mutex names_mutex;
    parallel_for(all_paths.size(), [&](std::size_t i) {
        const EventSet events = read_selection_table(all_paths[i]);
        std::lock_guard lock(names_mutex);
        for (const auto& name : events.vocab.names()) {
            names.insert(name);
        }
    });
    const ClassVocab vocab{std::vector<std::string>(names.begin(), names.end())};

    const std::vector<EventSet> preds = read_tables_with_vocab(pred_paths, vocab);
    const std::vector<EventSet> truths = read_tables_with_vocab(truth_paths, vocab);

    EvalConfig cfg;
    cfg.iou_thresholds = args.ious;
    std::sort(cfg.iou_thresholds.begin(), cfg.iou_thresholds.end());
    cfg.num_points = args.points;
    cfg.matching_mode = args.matching;
    cfg.ap_interpolation = args.interpolation;

    const EvalReport report = evaluate(preds, truths, cfg);

    std::ofstream out(args.out, std::ios::binary);
    if (!out) {
        throw IoError("cannot create report " + args.out);
    }
    out << "iou,class,ap,truth_count,pred_count,matched\n";
    for (const auto& threshold : report.thresholds) {
        for (const auto& entry : threshold.per_class) {
            out << format_fixed(threshold.iou_threshold, 6) << ','
                << vocab.name(entry.class_id) << ','
                << (entry.ap ? format_fixed(*entry.ap, 6) : std::string("absent")) << ','
                << entry.truth_count << ',' << entry.pred_count << ',' << entry.matched
                << '\n';
        }
        out << format_fixed(threshold.iou_threshold, 6) << ",mAP,"
            << format_fixed(threshold.map, 6) << ",,,\n";
    }
    if (!out) {
        throw IoError("failed writing report " + args.out);
    }

    if (!args.pr_out.empty()) {
        std::ofstream pr(args.pr_out, std::ios::binary);
        if (!pr) {
            throw IoError("cannot create PR curve file " + args.pr_out);
        }
        pr << "iou,class,score,precision,recall\n";
        for (const auto& threshold : report.thresholds) {
            for (const auto& entry : threshold.per_class) {
                for (const auto& point : entry.pr_curve) {
                    pr << format_fixed(threshold.iou_threshold, 6) << ','
                       << vocab.name(entry.class_id) << ',' << format_fixed(point.score, 6)
                       << ',' << format_fixed(point.precision, 6) << ','
                       << format_fixed(point.recall, 6) << '\n';
                }
            }
        }
    }

    for (const auto& threshold : report.thresholds) {
        std::cout << "mAP@" << format_fixed(threshold.iou_threshold, 2) << " = "
                  << format_fixed(threshold.map, 6) << '\n';
    }
    return 0;
}

// ----------------------------------------------------------------- synth

struct SynthArgs {
    std::string out_dir;
    double target_ratio = 0.0;
    int recordings = 1;
    int n_calls = -1;
    std::pair<int, int> n_range{-1, -1};
    double duration = 0.11;
    std::pair<double, double> duration_range{-1.0, -1.0};
    double clip_duration = 60.0;
    double tolerance = 0.005;
    int max_retries = 100;
    std::uint64_t seed = 0;
    std::string class_name = "call";
    std::string audio_dir;
    std::string background;
    std::pair<double, double> snr{-15.0, 0.0};
};

struct SynthRecordingResult {
    Placement placement;
    int n = 0;
    std::uint64_t stream = 0;
};

int cmd_synth(const SynthArgs& args) {
    if (args.recordings < 1) {
        throw ValidationError("at least one recording is required");
    }
    fs::create_directories(args.out_dir);

    // Audio material, when requested.
    std::vector<PcmClip> library;
    PcmClip background;
    const bool audio = !args.audio_dir.empty();
    if (audio) {
        if (args.background.empty()) {
            throw ValidationError("--audio-dir requires --background");
        }
        background = read_wav(args.background);
        std::vector<fs::path> wavs;
        for (const auto& entry : fs::directory_iterator(args.audio_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".wav") {
                wavs.push_back(entry.path());
            }
        }
        std::sort(wavs.begin(), wavs.end());
        if (wavs.empty()) {
            throw ValidationError("no .wav files in " + args.audio_dir);
        }
        for (const auto& path : wavs) {
            PcmClip clip = read_wav(path);
            if (clip.sample_rate != background.sample_rate) {
                throw ValidationError(path.string() + ": sample rate differs from background");
            }
            library.push_back(std::move(clip));
        }
        const auto needed = static_cast<Eigen::Index>(
            std::llround(args.clip_duration * background.sample_rate));
        if (background.samples.size() < needed) {
            throw ValidationError("background shorter than the clip duration");
        }
        background.samples = background.samples.head(needed).eval();
    }

    const Rng base(args.seed);
    std::vector<SynthRecordingResult> results(static_cast<std::size_t>(args.recordings));

    parallel_for(static_cast<std::size_t>(args.recordings), [&](std::size_t r) {
        const Rng recording_rng = base.substream(r);
        Rng draw_rng = recording_rng.substream(0);

        SynthSpec spec;
        spec.clip_duration = args.clip_duration;
        spec.target_overlap_ratio = args.target_ratio;
        spec.tolerance = args.tolerance;
        spec.max_retries = args.max_retries;
        spec.class_name = args.class_name;
        spec.snr_range_db = args.snr;

        if (args.n_range.first >= 1) {
            spec.n_calls = args.n_range.first +
                           static_cast<int>(draw_rng.uniform_int(static_cast<std::uint64_t>(
                               args.n_range.second - args.n_range.first + 1)));
        } else if (args.n_calls >= 1) {
            spec.n_calls = args.n_calls;
        } else {
            throw ValidationError("one of --n or --n-range is required");
        }

        if (audio) {
            for (const PcmClip& clip : library) {
                spec.call_durations.push_back(clip.duration());
            }
        } else if (args.duration_range.first > 0.0) {
            spec.call_durations.resize(static_cast<std::size_t>(spec.n_calls));
            for (auto& d : spec.call_durations) {
                d = draw_rng.uniform(args.duration_range.first, args.duration_range.second);
            }
        } else {
            spec.call_durations.assign(static_cast<std::size_t>(spec.n_calls), args.duration);
        }

        SynthRecordingResult& slot = results[r];
        slot.n = spec.n_calls;
        slot.stream = recording_rng.stream();
        slot.placement = place_events(spec, recording_rng.substream(1));

        std::ostringstream name;
        name << "recording_" << std::setw(3) << std::setfill('0') << r;
        write_selection_table(slot.placement.events,
                              fs::path(args.out_dir) / (name.str() + ".txt"));

        if (audio) {
            std::vector<PcmClip> calls;
            calls.reserve(slot.placement.call_index.size());
            for (int index : slot.placement.call_index) {
                calls.push_back(library[static_cast<std::size_t>(index)]);
            }
            Rng mix_rng = recording_rng.substream(2);
            const MixResult mixed =
                mix(background, calls, slot.placement.events, spec, mix_rng);
            write_wav(mixed.mixture, fs::path(args.out_dir) / (name.str() + ".wav"));
        }
    });

    std::ofstream manifest(fs::path(args.out_dir) / "manifest.csv", std::ios::binary);
    if (!manifest) {
        throw IoError("cannot create manifest in " + args.out_dir);
    }
    manifest << "recording,n,achieved_ratio,seed,stream,attempts\n";
    for (std::size_t r = 0; r < results.size(); ++r) {
        std::ostringstream name;
        name << "recording_" << std::setw(3) << std::setfill('0') << r;
        manifest << name.str() << ',' << results[r].n << ','
                 << format_fixed(results[r].placement.achieved_ratio, 6) << ',' << args.seed
                 << ',' << results[r].stream << ',' << results[r].placement.attempts << '\n';
    }

    std::cout << "synthesized " << args.recordings << " recording(s) in " << args.out_dir
              << '\n';
    return 0;
}

// ----------------------------------------------------------------- stats

struct StatsArgs {
    std::string input;
    std::string out;
    double window = 60.0;
    TDenominator denominator = TDenominator::paper_sqrt_n_minus_1;
};

int cmd_stats(const StatsArgs& args) {
    std::ifstream file(args.input);
    if (!file) {
        throw IoError("cannot open " + args.input);
    }
    std::string line;
    if (!std::getline(file, line)) {
        throw ValidationError(args.input + ": empty file");
    }
    const auto header = split(std::string(trim(line)), ',');
    const std::vector<std::string> wanted{"file", "n", "d", "B", "observed"};
    if (header.size() != wanted.size()) {
        throw ValidationError(args.input + ": header must be 'file,n,d,B,observed'");
    }
    for (std::size_t i = 0; i < wanted.size(); ++i) {
        if (std::string(trim(header[i])) != wanted[i]) {
            throw ValidationError(args.input + ": header must be 'file,n,d,B,observed'");
        }
    }

    struct Row {
        std::string file;
        int n;
        double d;
        int sources;
        double observed;
        double expected;
    };
    std::vector<Row> rows;
    std::size_t line_number = 1;
    while (std::getline(file, line)) {
        ++line_number;
        if (trim(line).empty()) {
            continue;
        }
        const std::string where = args.input + ":" + std::to_string(line_number);
        const auto fields = split(std::string(trim(line)), ',');
        if (fields.size() != 5) {
            throw ValidationError(where + ": expected 5 columns");
        }
        Row row;
        row.file = std::string(trim(fields[0]));
        row.n = static_cast<int>(parse_long(fields[1], where + " (n)"));
        row.sources = static_cast<int>(parse_long(fields[3], where + " (B)"));
        row.observed = parse_double(fields[4], where + " (observed)");

        OverlapModelInput input;
        if (fields[2].find(';') != std::string::npos) {
            for (const auto& piece : split(fields[2], ';')) {
                input.durations.push_back(parse_double(piece, where + " (duration)"));
            }
            if (static_cast<int>(input.durations.size()) != row.n) {
                throw ValidationError(where + ": duration list length differs from n");
            }
            input.window = args.window;
            input.sources = row.sources;
            row.d = input.density();
        } else {
            row.d = parse_double(fields[2], where + " (d)");
            input = OverlapModelInput::from_density(row.n, row.d, args.window, row.sources);
        }
        row.expected = expected_overlaps(input);
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) {
        throw ValidationError(args.input + ": at least two rows are required");
    }

    std::ostream* out = &std::cout;
    std::ofstream out_file;
    if (!args.out.empty()) {
        out_file.open(args.out, std::ios::binary);
        if (!out_file) {
            throw IoError("cannot create " + args.out);
        }
        out = &out_file;
    }
    *out << "file,n,d,B,expected,observed,difference\n";
    std::vector<double> expected;
    std::vector<double> observed;
    for (const Row& row : rows) {
        expected.push_back(row.expected);
        observed.push_back(row.observed);
        *out << row.file << ',' << row.n << ',' << format_fixed(row.d, 6) << ','
             << row.sources << ',' << format_fixed(row.expected, 6) << ','
             << format_fixed(row.observed, 6) << ','
             << format_fixed(row.expected - row.observed, 6) << '\n';
    }

    const PairedTResult t = paired_t_statistic(expected, observed, args.denominator);
    std::cout << "t_statistic: mean_diff=" << format_fixed(t.mean_diff, 6)
              << " sd_diff=" << format_fixed(t.sd_diff, 6) << " t="
              << (t.degenerate && t.mean_diff != 0.0 ? std::string("inf")
                                                     : format_fixed(t.t, 6))
              << " denominator="
              << (args.denominator == TDenominator::paper_sqrt_n_minus_1 ? "paper"
                                                                         : "standard")
              << '\n';
    return 0;
}

// ------------------------------------------------------------- losscheck

struct LosscheckArgs {
    std::string preds;
    std::string truth;
    double alpha = 2.0;
    double beta = 4.0;
    double s = 6.0;
    double lambda = 1.0;
    double rho = 1.0;
    double fd_step = 1e-6;
    int max_coords = 256;
    std::string dump_targets;
};

double relative_error(double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    if (diff <= 1e-8) {
        return 0.0;
    }
    return diff / std::max(std::abs(analytic), std::abs(numeric));
}

int cmd_losscheck(const LosscheckArgs& args) {
    const PredictionFile file = read_predictions(args.preds);
    const FramePredictions& preds = file.predictions;
    const EventSet truth = read_selection_table(args.truth, file.vocab);

    LossConfig cfg;
    cfg.alpha = args.alpha;
    cfg.beta = args.beta;
    cfg.s = args.s;
    cfg.lambda = args.lambda;
    cfg.rho = args.rho;

    const TargetSeries targets =
        build_targets(truth, preds.frame_rate, preds.frames(), cfg);

    if (!args.dump_targets.empty()) {
        std::ofstream dump(args.dump_targets, std::ios::binary);
        if (!dump) {
            throw IoError("cannot create " + args.dump_targets);
        }
        dump << "frame,p_target,is_onset,dur_target,class_id\n";
        std::map<int, std::size_t> onset_slot;
        for (std::size_t i = 0; i < targets.onset_frames.size(); ++i) {
            onset_slot[targets.onset_frames[i]] = i;
        }
        for (Eigen::Index t = 0; t < targets.frames(); ++t) {
            const auto it = onset_slot.find(static_cast<int>(t));
            dump << t << ',' << format_fixed(targets.p_target[t], 9) << ','
                 << (it != onset_slot.end() ? 1 : 0) << ',';
            if (it != onset_slot.end()) {
                dump << format_fixed(targets.dur_target[static_cast<Eigen::Index>(it->second)], 9)
                     << ',' << targets.class_target[it->second] << '\n';
            } else {
                dump << "0.000000000,-1\n";
            }
        }
    }

    const TotalLoss total = total_loss(preds, targets, cfg);
    std::cout << "frames," << targets.frames() << '\n';
    std::cout << "onset_frames," << targets.onset_frames.size() << '\n';
    std::cout << "loss_detection," << format_fixed(total.detection, 9) << '\n';
    std::cout << "loss_regression," << format_fixed(total.regression, 9) << '\n';
    std::cout << "loss_classification," << format_fixed(total.classification, 9) << '\n';
    std::cout << "loss_total," << format_fixed(total.loss, 9) << '\n';

    const double h = args.fd_step;
    const Eigen::Index t_count = preds.frames();

    // Coordinates checked: every onset frame plus an even spread of the rest.
    std::vector<Eigen::Index> coords(targets.onset_frames.begin(), targets.onset_frames.end());
    const Eigen::Index budget = std::max<Eigen::Index>(1, args.max_coords);
    const Eigen::Index stride = std::max<Eigen::Index>(1, t_count / budget);
    for (Eigen::Index t = 0; t < t_count; t += stride) {
        coords.push_back(t);
    }
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());

    double worst = 0.0;
    FramePredictions probe = preds;
    for (Eigen::Index t : coords) {
        const double saved = probe.p_det[t];
        // Keep probes inside the clamp so the finite difference sees the
        // differentiable branch.
        if (saved < 2.0 * h || saved > 1.0 - 2.0 * h) {
            continue;
        }
        probe.p_det[t] = saved + h;
        const double up = detection_loss(probe.p_det, targets, cfg).loss;
        probe.p_det[t] = saved - h;
        const double down = detection_loss(probe.p_det, targets, cfg).loss;
        probe.p_det[t] = saved;
        worst = std::max(worst,
                         relative_error(total.d_p_det[t], (up - down) / (2.0 * h)));
    }
    const double det_worst = worst;

    worst = 0.0;
    for (std::size_t slot = 0; slot < targets.onset_frames.size(); ++slot) {
        const int frame = targets.onset_frames[slot];
        const double saved = probe.dur_reg[frame];
        // Skip the kink at exact equality and the clamp at zero.
        if (std::abs(saved - targets.dur_target[static_cast<Eigen::Index>(slot)]) < 2.0 * h ||
            saved < 2.0 * h) {
            continue;
        }
        probe.dur_reg[frame] = saved + h;
        const double up = regression_loss(probe.dur_reg, targets, cfg).loss;
        probe.dur_reg[frame] = saved - h;
        const double down = regression_loss(probe.dur_reg, targets, cfg).loss;
        probe.dur_reg[frame] = saved;
        const double analytic =
            cfg.lambda == 0.0 ? regression_loss(probe.dur_reg, targets, cfg).grad[frame]
                              : total.d_dur_reg[frame] / cfg.lambda;
        worst = std::max(worst, relative_error(analytic, (up - down) / (2.0 * h)));
    }
    const double reg_worst = worst;

    worst = 0.0;
    for (int frame : targets.onset_frames) {
        for (Eigen::Index c = 0; c < preds.classes(); ++c) {
            const double saved = probe.class_logits(frame, c);
            probe.class_logits(frame, c) = saved + h;
            const double up = classification_loss(probe.class_logits, targets, cfg).loss;
            probe.class_logits(frame, c) = saved - h;
            const double down = classification_loss(probe.class_logits, targets, cfg).loss;
            probe.class_logits(frame, c) = saved;
            const double analytic =
                cfg.rho == 0.0
                    ? classification_loss(probe.class_logits, targets, cfg).grad(frame, c)
                    : total.d_class_logits(frame, c) / cfg.rho;
            worst = std::max(worst, relative_error(analytic, (up - down) / (2.0 * h)));
        }
    }
    const double cls_worst = worst;

    const double limit = 1e-5;
    const bool ok = det_worst < limit && reg_worst < limit && cls_worst < limit;
    std::cout << "grad_detection,max_rel_err," << format_fixed(det_worst, 9) << ','
              << (det_worst < limit ? "PASS" : "FAIL") << '\n';
    std::cout << "grad_regression,max_rel_err," << format_fixed(reg_worst, 9) << ','
              << (reg_worst < limit ? "PASS" : "FAIL") << '\n';
    std::cout << "grad_classification,max_rel_err," << format_fixed(cls_worst, 9) << ','
              << (cls_worst < limit ? "PASS" : "FAIL") << '\n';
    std::cout << "grad_check," << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? 0 : 1;
}

std::pair<double, double> parse_range(const std::string& text, const char* flag) {
    const auto parts = split(text, ':');
    if (parts.size() != 2) {
        throw ValidationError(std::string(flag) + " expects lo:hi");
    }
    return {parse_double(parts[0], flag), parse_double(parts[1], flag)};
}

// Flat key=value config support: --config FILE is consumed here, and each
// key the command line did not already mention is appended as --key=value,
// so explicit flags always win.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) {
                throw ValidationError("--config expects a file path");
            }
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (config_path.empty()) {
        return args;
    }

    std::ifstream file(config_path);
    if (!file) {
        throw IoError("cannot open config file " + config_path);
    }

    std::set<std::string> given;
    for (const auto& arg : args) {
        if (arg.rfind("--", 0) == 0) {
            given.insert(arg.substr(0, arg.find('=')));
        }
    }

    std::string line;
    std::size_t line_number = 0;
    while (std::getline(file, line)) {
        ++line_number;
        const auto content = trim(line);
        if (content.empty() || content.front() == '#') {
            continue;
        }
        const std::size_t eq = content.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError(config_path + ":" + std::to_string(line_number) +
                                  ": expected key=value");
        }
        std::string key(trim(content.substr(0, eq)));
        while (!key.empty() && key.front() == '-') {
            key.erase(key.begin());
        }
        if (key.empty()) {
            throw ValidationError(config_path + ":" + std::to_string(line_number) +
                                  ": empty key");
        }
        const std::string value(trim(content.substr(eq + 1)));
        if (!given.contains("--" + key)) {
            args.push_back("--" + key + "=" + value);
        }
    }
    return args;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"1-D sound-event bounding boxes: decoding, fusion, evaluation, "
                 "synthesis and overlap statistics"};
    app.require_subcommand(1);

    DecodeArgs decode_args;
    auto* decode = app.add_subcommand("decode", "predictions -> selection table");
    std::string config_doc;
    decode->add_option("--config", config_doc, "flat key=value file mirroring these flags");
    decode->add_option("--preds", decode_args.preds, "prediction CSV")->required();
    decode->add_option("--out", decode_args.out, "output selection table")->required();
    decode->add_option("--threshold", decode_args.threshold, "detection threshold");
    decode->add_option("--sigma", decode_args.sigma, "soft-NMS sigma");
    decode->add_option("--score-floor", decode_args.score_floor, "soft-NMS score floor");
    decode->add_flag("--no-nms", decode_args.no_nms, "skip soft-NMS");
    decode->callback([&] { cmd_decode(decode_args); });

    FuseArgs fuse_args;
    auto* fuse = app.add_subcommand("fuse", "forward + backward predictions -> fused table");
    fuse->add_option("--config", config_doc, "flat key=value file mirroring these flags");
    fuse->add_option("--forward", fuse_args.forward, "forward prediction CSV")->required();
    fuse->add_option("--backward", fuse_args.backward, "backward prediction CSV")->required();
    fuse->add_option("--out", fuse_args.out, "output selection table")->required();
    fuse->add_option("--threshold", fuse_args.threshold, "detection threshold");
    fuse->add_option("--sigma", fuse_args.sigma, "soft-NMS sigma");
    fuse->add_option("--score-floor", fuse_args.score_floor, "soft-NMS score floor");
    fuse->add_option("--fusion-iou", fuse_args.fusion_iou, "IoU threshold for matching");
    fuse->add_option("--unmatched", fuse_args.unmatched, "unmatched box policy")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, UnmatchedPolicy>{
                {"keep-forward", UnmatchedPolicy::keep_forward},
                {"keep-both", UnmatchedPolicy::keep_both},
                {"drop", UnmatchedPolicy::drop}},
            CLI::ignore_case));
    fuse->callback([&] { cmd_fuse(fuse_args); });

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "prediction tables vs truth tables -> report");
    eval->add_option("--config", config_doc, "flat key=value file mirroring these flags");
    eval->add_option("--preds", eval_args.preds, "prediction tables")->required();
    eval->add_option("--truth", eval_args.truths, "ground-truth tables")->required();
    eval->add_option("--out", eval_args.out, "report CSV")->required();
    eval->add_option("--pr-out", eval_args.pr_out, "optional PR curve CSV");
    eval->add_option("--iou", eval_args.ious, "IoU thresholds")->delimiter(',');
    eval->add_option("--points", eval_args.points, "AP discretization points");
    eval->add_option("--matching", eval_args.matching, "matching mode")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, MatchingMode>{
                {"greedy", MatchingMode::greedy_by_score},
                {"maxcard", MatchingMode::max_cardinality}},
            CLI::ignore_case));
    eval->add_option("--ap-mode", eval_args.interpolation,
                     "AP discretization (recall levels or score thresholds)")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, ApInterpolation>{
                {"recall", ApInterpolation::recall_levels},
                {"score", ApInterpolation::score_thresholds}},
            CLI::ignore_case));
    eval->callback([&] { cmd_eval(eval_args); });

    SynthArgs synth_args;
    std::string n_range_text;
    std::string duration_range_text;
    std::string snr_text;
    auto* synth = app.add_subcommand("synth", "overlap-controlled synthetic recordings");
    synth->add_option("--config", config_doc, "flat key=value file mirroring these flags");
    synth->add_option("--out-dir", synth_args.out_dir, "output directory")->required();
    synth->add_option("--R", synth_args.target_ratio, "target overlap-to-call ratio")
        ->required();
    synth->add_option("--recordings", synth_args.recordings, "number of recordings");
    synth->add_option("--n", synth_args.n_calls, "calls per recording");
    synth->add_option("--n-range", n_range_text, "draw n uniformly from lo:hi");
    synth->add_option("--duration", synth_args.duration, "symbolic call duration (s)");
    synth->add_option("--duration-range", duration_range_text,
                      "draw call durations uniformly from lo:hi");
    synth->add_option("--clip-duration", synth_args.clip_duration, "recording length (s)");
    synth->add_option("--tolerance", synth_args.tolerance, "accepted |achieved - R|");
    synth->add_option("--max-retries", synth_args.max_retries, "placement retries");
    synth->add_option("--seed", synth_args.seed, "RNG seed");
    synth->add_option("--class-name", synth_args.class_name, "annotation label");
    synth->add_option("--audio-dir", synth_args.audio_dir, "directory of call WAVs");
    synth->add_option("--background", synth_args.background, "background WAV");
    synth->add_option("--snr", snr_text, "SNR range in dB as lo:hi");
    synth->callback([&] {
        if (!n_range_text.empty()) {
            const auto range = parse_range(n_range_text, "--n-range");
            synth_args.n_range = {static_cast<int>(range.first),
                                  static_cast<int>(range.second)};
        }
        if (!duration_range_text.empty()) {
            synth_args.duration_range = parse_range(duration_range_text, "--duration-range");
        }
        if (!snr_text.empty()) {
            synth_args.snr = parse_range(snr_text, "--snr");
        }
        cmd_synth(synth_args);
    });

    StatsArgs stats_args;
    auto* stats = app.add_subcommand("stats", "expected-overlap table and t statistic");
    stats->add_option("--config", config_doc, "flat key=value file mirroring these flags");
    stats->add_option("--input", stats_args.input, "CSV with file,n,d,B,observed")
        ->required();
    stats->add_option("--out", stats_args.out, "output CSV (default stdout)");
    stats->add_option("--window", stats_args.window, "window length in seconds");
    stats->add_option("--t-denominator", stats_args.denominator, "t statistic convention")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, TDenominator>{
                {"paper", TDenominator::paper_sqrt_n_minus_1},
                {"standard", TDenominator::standard_sqrt_n}},
            CLI::ignore_case));
    stats->callback([&] { cmd_stats(stats_args); });

    LosscheckArgs loss_args;
    auto* losscheck =
        app.add_subcommand("losscheck", "loss values and a finite-difference gradient report");
    losscheck->add_option("--config", config_doc, "flat key=value file mirroring these flags");
    losscheck->add_option("--preds", loss_args.preds, "prediction CSV")->required();
    losscheck->add_option("--truth", loss_args.truth, "ground-truth selection table")
        ->required();
    losscheck->add_option("--alpha", loss_args.alpha, "focal alpha");
    losscheck->add_option("--beta", loss_args.beta, "focal beta");
    losscheck->add_option("--s", loss_args.s, "target sharpness");
    losscheck->add_option("--lambda", loss_args.lambda, "regression weight");
    losscheck->add_option("--rho", loss_args.rho, "classification weight");
    losscheck->add_option("--fd-step", loss_args.fd_step, "finite-difference step");
    losscheck->add_option("--max-coords", loss_args.max_coords,
                          "detection coordinates to probe");
    losscheck->add_option("--dump-targets", loss_args.dump_targets,
                          "write the built targets to this CSV");
    int losscheck_rc = 0;
    losscheck->callback([&] { losscheck_rc = cmd_losscheck(loss_args); });

    try {
        args = apply_config_file(std::move(args));
        std::vector<const char*> argv;
        argv.reserve(args.size() + 1);
        argv.push_back("sedbox");
        for (const auto& arg : args) {
            argv.push_back(arg.c_str());
        }
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const GenerationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return losscheck_rc;
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run_cli(std::move(args));
}

}  // namespace sedbox
