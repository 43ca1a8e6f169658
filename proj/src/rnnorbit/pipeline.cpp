#include "rnnorbit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace rnnorbit {

namespace fs = std::filesystem;

namespace {

constexpr const char* kToolkitVersion = "0.1.0";

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::uint64_t to_u64(const std::string& s, const std::string& key) {
    try {
        return std::stoull(s);
    } catch (...) {
        throw ParamError("config: invalid integer for " + key + ": " + s);
    }
}

double to_f64(const std::string& s, const std::string& key) {
    try {
        return std::stod(s);
    } catch (...) {
        throw ParamError("config: invalid number for " + key + ": " + s);
    }
}

std::vector<std::size_t> to_u64_list(const std::string& s, const std::string& key) {
    std::string normalized = s;
    std::replace(normalized.begin(), normalized.end(), ',', ' ');
    std::vector<std::size_t> out;
    std::string item;
    std::istringstream in(normalized);
    while (in >> item) out.push_back(to_u64(item, key));
    return out;
}

double now_ms() {
    using namespace std::chrono;
    return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text) {
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ParamError("config line " + std::to_string(lineno) +
                             ": expected 'key = value'");
        kv.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
    return parse(read_file(path));
}

bool KeyValueFile::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KeyValueFile::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ParamError("config: missing key '" + key + "'");
    return it->second;
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
}

std::string KeyValueFile::serialize() const {
    std::ostringstream out;
    for (const std::string& k : order_) out << k << " = " << values_.at(k) << "\n";
    return out.str();
}

std::string RunPaths::checkpoint_file(Arch arch, std::size_t epoch) const {
    return out_dir + "/" + arch_name(arch) + "_epoch" + std::to_string(epoch) + ".ckpt";
}

std::vector<std::string> run_train(const std::string& config_path,
                                   const std::string& out_dir, bool verbose) {
    const KeyValueFile kv = KeyValueFile::load(config_path);

    TrainConfig cfg;
    cfg.arch = arch_from_name(kv.get_or("arch", "vanilla"));
    cfg.hidden = to_u64(kv.get_or("hidden_size", "300"), "hidden_size");
    cfg.embed = to_u64(kv.get_or("embed_size", "500"), "embed_size");
    cfg.learning_rate = to_f64(kv.get_or("learning_rate", "0.001"), "learning_rate");
    cfg.window = to_u64(kv.get_or("window", "35"), "window");
    cfg.batch = to_u64(kv.get_or("batch_size", "20"), "batch_size");
    cfg.max_epochs = to_u64(kv.get_or("max_epochs", "40"), "max_epochs");
    cfg.seed = to_u64(kv.get_or("seed", "0"), "seed");
    cfg.grad_clip = to_f64(kv.get_or("grad_clip", "5.0"), "grad_clip");
    if (kv.has("checkpoint_epochs"))
        cfg.checkpoint_epochs = to_u64_list(kv.get("checkpoint_epochs"), "checkpoint_epochs");
    else
        cfg.checkpoint_epochs = {0, 10, 20, 30, 40};
    // Drop configured checkpoints past max_epochs instead of failing:
    // shorter runs keep the same config file.
    std::erase_if(cfg.checkpoint_epochs,
                  [&](std::size_t e) { return e > cfg.max_epochs; });
    const std::size_t min_count = to_u64(kv.get_or("min_count", "2"), "min_count");
    const std::string corpus_path = kv.get("corpus");

    RunPaths paths{out_dir};
    fs::create_directories(out_dir);

    const double t0 = now_ms();
    const std::string text = read_file(corpus_path);
    const std::uint64_t corpus_hash = fnv1a(text);
    const std::vector<std::string> tokens = tokenize(text);
    const Vocabulary vocab = build_vocab(tokens, min_count);
    save_vocab(paths.vocab_file(), vocab);
    const std::uint64_t vocab_hash = hash_file(paths.vocab_file());
    TokenStream stream = split(encode(vocab, tokens));
    const double t_ingest = now_ms() - t0;

    std::vector<std::string> written;
    const double t1 = now_ms();
    TrainResult result = train(
        cfg, stream, vocab_hash, vocab.size(),
        [&](const Checkpoint& c) {
            const std::string p = paths.checkpoint_file(cfg.arch, c.epoch);
            save_checkpoint(p, c);
            written.push_back(p);
        },
        [&](const EpochInfo& e) {
            if (verbose)
                std::cerr << "epoch " << e.epoch << "  loss "
                          << (std::isnan(e.train_loss) ? 0.0 : e.train_loss)
                          << "  val ppl " << e.val_perplexity
                          << (e.is_best ? "  (best)" : "") << "\n";
        });
    const double t_train = now_ms() - t1;

    KeyValueFile manifest;
    manifest.set("toolkit_version", kToolkitVersion);
    manifest.set("config_file", config_path);
    manifest.set("arch", arch_name(cfg.arch));
    manifest.set("hidden_size", std::to_string(cfg.hidden));
    manifest.set("embed_size", std::to_string(cfg.embed));
    manifest.set("learning_rate", kv.get_or("learning_rate", "0.001"));
    manifest.set("window", std::to_string(cfg.window));
    manifest.set("batch_size", std::to_string(cfg.batch));
    manifest.set("max_epochs", std::to_string(cfg.max_epochs));
    manifest.set("seed", std::to_string(cfg.seed));
    manifest.set("min_count", std::to_string(min_count));
    manifest.set("corpus", corpus_path);
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(corpus_hash));
        manifest.set("corpus_hash", buf);
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(vocab_hash));
        manifest.set("vocab_hash", buf);
    }
    manifest.set("corpus_tokens", std::to_string(tokens.size()));
    manifest.set("vocab_size", std::to_string(vocab.size()));
    manifest.set("train_tokens", std::to_string(stream.train_size()));
    manifest.set("valid_tokens", std::to_string(stream.valid_size()));
    manifest.set("best_epoch", std::to_string(result.best_epoch));
    manifest.set("best_val_perplexity", std::to_string(result.best_val_perplexity));
    // Logged assumptions: policies the toolkit fixes that the run should
    // be able to audit.
    manifest.set("assumption_grad_clip", std::to_string(cfg.grad_clip));
    manifest.set("assumption_lstm_c0", "gaussian, same distribution as h0");
    manifest.set("assumption_tokenization",
                 "lowercase words; . , ! ? ; : \" ' and em-dash split off");
    manifest.set("assumption_unk", "rare tokens map to trailing <unk> id");
    manifest.set("timing_ingest_ms", std::to_string(t_ingest));
    manifest.set("timing_train_ms", std::to_string(t_train));
    write_file(paths.manifest_file(), manifest.serialize());
    return written;
}

std::pair<Checkpoint, Vocabulary> load_model_checked(const std::string& checkpoint_path,
                                                     const std::string& vocab_path) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    Vocabulary vocab = load_vocab(vocab_path);
    const std::uint64_t h = hash_file(vocab_path);
    if (h != ckpt.vocab_hash)
        throw StateError("vocabulary file " + vocab_path +
                         " does not match the checkpoint's vocabulary hash");
    return {std::move(ckpt), std::move(vocab)};
}

VerdictFile run_analyze(const Checkpoint& ckpt, const Vocabulary& vocab,
                        const AnalyzeOptions& opts, const std::string& out_csv,
                        const std::string& dump_dir) {
    if (ckpt.params.vocab != vocab.size())
        throw StateError("analyze: checkpoint vocabulary size (" +
                         std::to_string(ckpt.params.vocab) +
                         ") does not match vocabulary file (" +
                         std::to_string(vocab.size()) + ")");
    if (opts.mode == MapMode::WithoutInput && opts.count == 0)
        throw ParamError("analyze: without-input mode needs --count >= 1");

    Rng rng(opts.seed);
    const std::vector<InitialCondition> conditions =
        sample_initial_conditions(opts.mode, vocab.size(), rng, opts.count);

    OrbitConfig ocfg;
    ocfg.mode = opts.mode;
    ocfg.detect_budget = opts.detect_budget;
    ocfg.verify_budget = opts.verify_budget;
    ocfg.init_mean = opts.init_mean;
    ocfg.init_std = opts.init_std;

    VerdictFile out;
    out.arch = arch_name(ckpt.config.arch);
    out.epoch = ckpt.epoch;
    out.mode = opts.mode;
    out.condition_ids.resize(conditions.size());
    out.verdicts.resize(conditions.size());
    std::vector<TrajectoryResult> dumps(
        std::min<std::size_t>(opts.dump_trajectories, conditions.size()));

    // Fan out over workers; slot i of the result vectors belongs to
    // condition i, so merge order is independent of completion order.
    const std::size_t workers = std::max<std::size_t>(1, opts.workers);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= conditions.size()) return;
            TrajectoryResult r = run_trajectory(ckpt.params, conditions[i], ocfg);
            out.condition_ids[i] = i;
            out.verdicts[i] = r.verdict;
            if (i < dumps.size()) dumps[i] = std::move(r);
        }
    };
    if (workers == 1) {
        work();
    } else {
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    save_verdicts(out_csv, out);
    if (!dump_dir.empty()) {
        fs::create_directories(dump_dir);
        for (std::size_t i = 0; i < dumps.size(); ++i) {
            const std::string p = dump_dir + "/" + out.arch + "_" + mode_name(opts.mode) +
                                  "_epoch" + std::to_string(out.epoch) + "_cond" +
                                  std::to_string(i) + ".traj";
            save_trajectory(p, dumps[i].trajectory, dumps[i].verdict);
        }
    }
    return out;
}

void save_verdicts(const std::string& path, const VerdictFile& v) {
    std::ostringstream out;
    out << "# rnnorbit verdicts v1\n"
        << "# arch=" << v.arch << "\n"
        << "# epoch=" << v.epoch << "\n"
        << "# mode=" << mode_name(v.mode) << "\n"
        << "condition,period,detect_step,verified_reps\n";
    for (std::size_t i = 0; i < v.verdicts.size(); ++i) {
        const OrbitVerdict& d = v.verdicts[i];
        out << v.condition_ids[i] << ",";
        if (d.periodic)
            out << d.period << "," << d.detect_step << "," << d.verified_reps;
        else
            out << "NONPERIODIC," << d.steps_examined << ",0";
        out << "\n";
    }
    write_file(path, out.str());
}

VerdictFile load_verdicts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open verdict file: " + path);
    VerdictFile v;
    std::string line;
    bool saw_header = false;
    bool saw_magic = false;
    while (std::getline(in, line)) {
        if (line.rfind("# rnnorbit verdicts", 0) == 0) {
            saw_magic = true;
            continue;
        }
        if (line.rfind("# arch=", 0) == 0) { v.arch = line.substr(7); continue; }
        if (line.rfind("# epoch=", 0) == 0) { v.epoch = std::stoull(line.substr(8)); continue; }
        if (line.rfind("# mode=", 0) == 0) { v.mode = mode_from_name(line.substr(7)); continue; }
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("condition,", 0) == 0) {
            saw_header = true;
            continue;
        }
        if (!saw_magic) throw IngestError("not a verdict file: " + path);
        try {
            std::istringstream row(line);
            std::string cell;
            OrbitVerdict d;
            std::getline(row, cell, ',');
            v.condition_ids.push_back(std::stoull(cell));
            std::getline(row, cell, ',');
            if (cell == "NONPERIODIC") {
                std::getline(row, cell, ',');
                d.steps_examined = std::stoull(cell);
            } else {
                d.periodic = true;
                d.period = std::stoull(cell);
                std::getline(row, cell, ',');
                d.detect_step = std::stoull(cell);
                std::getline(row, cell, ',');
                d.verified_reps = std::stoull(cell);
            }
            v.verdicts.push_back(std::move(d));
        } catch (const IngestError&) {
            throw;
        } catch (const std::exception&) {
            throw IngestError("malformed verdict row in " + path + ": " + line);
        }
    }
    if (!saw_magic || !saw_header)
        throw IngestError("not a verdict file: " + path);
    if (v.verdicts.empty()) throw IngestError("empty verdict file: " + path);
    return v;
}

namespace {

constexpr char kTrajMagic[4] = {'O', 'R', 'B', 'T'};

void twr(std::ostream& o, const void* p, std::size_t n) {
    o.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <typename T>
void twr_v(std::ostream& o, T v) { twr(o, &v, sizeof v); }

void trd(std::istream& i, void* p, std::size_t n) {
    i.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!i) throw IoError("trajectory dump: truncated");
}
template <typename T>
T trd_v(std::istream& i) {
    T v;
    trd(i, &v, sizeof v);
    return v;
}

}  // namespace

void save_trajectory(const std::string& path, const Trajectory& t,
                     const OrbitVerdict& v) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write trajectory dump: " + path);
    twr(out, kTrajMagic, 4);
    twr_v<std::uint32_t>(out, 1);  // version
    twr_v<std::uint32_t>(out, t.mode == MapMode::WithInput ? 0 : 1);
    twr_v<std::int64_t>(out, t.ic.word_id);
    twr_v<std::uint64_t>(out, t.ic.h0_seed);
    twr_v<std::uint64_t>(out, t.total_steps);
    twr_v<std::uint64_t>(out, t.burn_in);
    twr_v<std::uint64_t>(out, t.tokens.size());
    for (int tok : t.tokens) twr_v<std::int32_t>(out, tok);
    twr_v<std::uint64_t>(out, t.states.size());
    for (const auto& [step, h] : t.states) {
        twr_v<std::uint64_t>(out, step);
        twr_v<std::uint64_t>(out, h.size());
        twr(out, h.data(), h.size() * sizeof(double));
    }
    twr_v<std::uint8_t>(out, v.periodic ? 1 : 0);
    twr_v<std::uint64_t>(out, v.period);
    twr_v<std::uint64_t>(out, v.detect_step);
    twr_v<std::uint64_t>(out, v.verified_reps);
    twr_v<std::uint64_t>(out, v.steps_examined);
    twr_v<std::uint64_t>(out, v.cycle.size());
    for (int tok : v.cycle) twr_v<std::int32_t>(out, tok);
    if (!out) throw IoError("trajectory dump write failed: " + path);
}

std::pair<Trajectory, OrbitVerdict> load_trajectory(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open trajectory dump: " + path);
    char magic[4];
    trd(in, magic, 4);
    if (std::memcmp(magic, kTrajMagic, 4) != 0)
        throw IngestError("not a trajectory dump: " + path);
    if (trd_v<std::uint32_t>(in) != 1)
        throw IngestError("unsupported trajectory dump version in " + path);
    Trajectory t;
    t.mode = trd_v<std::uint32_t>(in) == 0 ? MapMode::WithInput : MapMode::WithoutInput;
    t.ic.word_id = static_cast<int>(trd_v<std::int64_t>(in));
    t.ic.h0_seed = trd_v<std::uint64_t>(in);
    t.total_steps = trd_v<std::uint64_t>(in);
    t.burn_in = trd_v<std::uint64_t>(in);
    const std::uint64_t ntok = trd_v<std::uint64_t>(in);
    t.tokens.resize(ntok);
    for (auto& tok : t.tokens) tok = trd_v<std::int32_t>(in);
    const std::uint64_t nstates = trd_v<std::uint64_t>(in);
    t.states.resize(nstates);
    for (auto& [step, h] : t.states) {
        step = trd_v<std::uint64_t>(in);
        h.resize(trd_v<std::uint64_t>(in));
        trd(in, h.data(), h.size() * sizeof(double));
    }
    OrbitVerdict v;
    v.periodic = trd_v<std::uint8_t>(in) != 0;
    v.period = trd_v<std::uint64_t>(in);
    v.detect_step = trd_v<std::uint64_t>(in);
    v.verified_reps = trd_v<std::uint64_t>(in);
    v.steps_examined = trd_v<std::uint64_t>(in);
    v.cycle.resize(trd_v<std::uint64_t>(in));
    for (auto& tok : v.cycle) tok = trd_v<std::int32_t>(in);
    return {std::move(t), v};
}

std::vector<std::string> run_report(const std::vector<std::string>& verdict_paths,
                                    const std::vector<std::string>& dump_paths,
                                    const std::string& out_dir) {
    if (verdict_paths.empty() && dump_paths.empty())
        throw ParamError("report: no inputs");
    fs::create_directories(out_dir);
    std::vector<std::string> written;

    std::vector<PeriodStats> with_input, without_input;
    for (const std::string& p : verdict_paths) {
        const VerdictFile vf = load_verdicts(p);
        PeriodStats s = aggregate(vf.verdicts);
        s.arch = vf.arch;
        s.epoch = vf.epoch;
        s.mode = vf.mode;
        (vf.mode == MapMode::WithInput ? with_input : without_input).push_back(std::move(s));
    }

    if (!with_input.empty()) {
        const std::string p = out_dir + "/table_with-input.csv";
        write_file(p, render_table(with_input));
        written.push_back(p);
    }
    if (!without_input.empty()) {
        // Table 2 summarizes the trained model: keep each architecture's
        // latest epoch.
        std::vector<PeriodStats> latest;
        for (const auto& s : without_input) {
            bool superseded = false;
            for (const auto& o : without_input)
                if (o.arch == s.arch && o.epoch > s.epoch) superseded = true;
            if (!superseded) latest.push_back(s);
        }
        const std::string p = out_dir + "/table_without-input.csv";
        write_file(p, render_sink_table(latest));
        written.push_back(p);
    }
    // Per-checkpoint stats sidecars.
    auto emit_stats = [&](const std::vector<PeriodStats>& group) {
        for (const auto& s : group) {
            const std::string p = out_dir + "/" + s.arch + "_" + mode_name(s.mode) +
                                  "_epoch" + std::to_string(s.epoch) + ".csv";
            std::ostringstream o;
            o << "metric,value\n"
              << "trajectories," << s.trajectory_count << "\n"
              << "periodic," << s.periodic_count << "\n"
              << "average_period,";
            {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.17g", s.average_period);
                o << buf << "\n";
            }
            {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.1f", s.percent_non_periodic);
                o << "non_periodic_pct," << buf << "\n";
            }
            for (const auto& [period, count] : s.histogram)
                o << "hist_" << (period == 0 ? std::string("nonperiodic")
                                             : std::to_string(period))
                  << "," << count << "\n";
            write_file(p, o.str());
            written.push_back(p);
        }
    };
    emit_stats(with_input);
    emit_stats(without_input);

    for (const std::string& p : dump_paths) {
        auto [traj, verdict] = load_trajectory(p);
        const std::string stem = fs::path(p).stem().string();
        const std::string svg_path = out_dir + "/" + stem + ".svg";
        write_file(svg_path, render_orbit_plot(traj, verdict));
        written.push_back(svg_path);
    }
    return written;
}

}  // namespace rnnorbit
