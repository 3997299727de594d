#include "zrlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "zrlab/util.hpp"

namespace zrlab {

// ---------------------------------------------------------------- toml subset

namespace {

bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

// Strips a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_str) {
            if (c == '\\') ++i;
            else if (c == '"') in_str = false;
        } else if (c == '"') {
            in_str = true;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

TomlValue parse_scalar(const std::string& raw, int line_no) {
    const std::string text = trim(raw);
    if (text.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": missing value");
    TomlValue v;

    if (text.front() == '"') {
        if (text.size() < 2 || text.back() != '"')
            throw ConfigError("config line " + std::to_string(line_no) + ": unterminated string");
        v.kind = TomlValue::Kind::string_;
        for (std::size_t i = 1; i + 1 < text.size(); ++i) {
            char c = text[i];
            if (c == '\\') {
                if (i + 2 >= text.size())
                    throw ConfigError("config line " + std::to_string(line_no) + ": bad escape");
                const char e = text[++i];
                if (e == 'n') c = '\n';
                else if (e == 't') c = '\t';
                else if (e == '"') c = '"';
                else if (e == '\\') c = '\\';
                else throw ConfigError("config line " + std::to_string(line_no) + ": bad escape");
            }
            v.s.push_back(c);
        }
        return v;
    }
    if (text == "true" || text == "false") {
        v.kind = TomlValue::Kind::boolean;
        v.b = text == "true";
        return v;
    }

    // Integer: optional sign, digits only. Anything else numeric is a float.
    bool integer = !text.empty();
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (i == 0 && (c == '+' || c == '-')) continue;
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            integer = false;
            break;
        }
    }
    try {
        if (integer) {
            v.kind = TomlValue::Kind::integer;
            v.i = std::stoll(text);
            v.f = static_cast<double>(v.i);
        } else {
            v.kind = TomlValue::Kind::floating;
            std::size_t used = 0;
            v.f = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
        }
    } catch (const std::exception&) {
        throw ConfigError("config line " + std::to_string(line_no) + ": bad value '" + text + "'");
    }
    return v;
}

TomlValue parse_value(const std::string& raw, int line_no) {
    const std::string text = trim(raw);
    if (!text.empty() && text.front() == '[') {
        if (text.back() != ']')
            throw ConfigError("config line " + std::to_string(line_no) + ": unterminated array");
        TomlValue v;
        v.kind = TomlValue::Kind::array;
        const std::string body = trim(text.substr(1, text.size() - 2));
        if (body.empty()) return v;
        std::size_t start = 0;
        bool in_str = false;
        for (std::size_t i = 0; i <= body.size(); ++i) {
            if (i < body.size() && in_str) {
                if (body[i] == '\\') ++i;
                else if (body[i] == '"') in_str = false;
                continue;
            }
            if (i < body.size() && body[i] == '"') {
                in_str = true;
                continue;
            }
            if (i == body.size() || body[i] == ',') {
                v.items.push_back(parse_scalar(body.substr(start, i - start), line_no));
                start = i + 1;
            }
        }
        return v;
    }
    return parse_scalar(text, line_no);
}

}  // namespace

std::map<std::string, TomlValue> parse_toml(const std::string& text) {
    std::map<std::string, TomlValue> out;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string raw =
            text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(line_no) + ": empty section name");
            for (char c : section)
                if (!is_bare_key_char(c) && c != '.')
                    throw ConfigError("config line " + std::to_string(line_no) + ": bad section name");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty() || !std::all_of(key.begin(), key.end(), is_bare_key_char))
            throw ConfigError("config line " + std::to_string(line_no) + ": bad key '" + key + "'");

        const std::string path = section.empty() ? key : section + "." + key;
        if (out.count(path))
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + path + "'");
        out[path] = parse_value(line.substr(eq + 1), line_no);
    }
    return out;
}

// ---------------------------------------------------------------- reader

namespace {

// Typed, strict accessor over the flattened key table: every key must be
// consumed, and type errors carry the field path.
class ConfigReader {
  public:
    explicit ConfigReader(std::map<std::string, TomlValue> table) : table_(std::move(table)) {}

    bool has(const std::string& key) const { return table_.count(key) != 0; }

    void skip(const std::string& key) { used_.insert(key); }

    template <typename T>
    void get_int(const std::string& key, T& out) {
        const TomlValue* v = fetch(key);
        if (!v) return;
        if (v->kind != TomlValue::Kind::integer) throw ConfigError(key + ": expected integer");
        out = static_cast<T>(v->i);
    }

    void get_double(const std::string& key, double& out) {
        const TomlValue* v = fetch(key);
        if (!v) return;
        if (v->kind != TomlValue::Kind::integer && v->kind != TomlValue::Kind::floating)
            throw ConfigError(key + ": expected number");
        out = v->f;
    }

    void get_bool(const std::string& key, bool& out) {
        const TomlValue* v = fetch(key);
        if (!v) return;
        if (v->kind != TomlValue::Kind::boolean) throw ConfigError(key + ": expected boolean");
        out = v->b;
    }

    void get_string(const std::string& key, std::string& out) {
        const TomlValue* v = fetch(key);
        if (!v) return;
        if (v->kind != TomlValue::Kind::string_) throw ConfigError(key + ": expected string");
        out = v->s;
    }

    void get_int_array(const std::string& key, std::vector<std::int64_t>& out) {
        const TomlValue* v = fetch(key);
        if (!v) return;
        if (v->kind != TomlValue::Kind::array) throw ConfigError(key + ": expected array");
        out.clear();
        for (const auto& item : v->items) {
            if (item.kind != TomlValue::Kind::integer) throw ConfigError(key + ": expected integer array");
            out.push_back(item.i);
        }
    }

    void finish() const {
        for (const auto& [key, value] : table_)
            if (!used_.count(key)) throw ConfigError("unknown config key: " + key);
    }

  private:
    const TomlValue* fetch(const std::string& key) {
        auto it = table_.find(key);
        if (it == table_.end()) return nullptr;
        used_.insert(key);
        return &it->second;
    }

    std::map<std::string, TomlValue> table_;
    std::set<std::string> used_;
};

void apply_table(ConfigReader& r, RunConfig& c) {
    std::string s;

    r.skip("preset");  // consumed by the caller before defaults were chosen
    std::int64_t seed = static_cast<std::int64_t>(c.seed);
    r.get_int("seed", seed);
    c.seed = static_cast<std::uint64_t>(seed);

    r.get_string("data.manifest", c.data.manifest);
    r.get_string("data.dir", c.data.dir);
    r.get_double("data.chunk_seconds", c.data.chunk_seconds);

    r.get_int("features.sample_rate", c.features.sample_rate);
    r.get_int("features.n_mels", c.features.n_mels);
    r.get_double("features.win_ms", c.features.win_ms);
    r.get_int("features.hop", c.features.hop);
    r.get_int("features.n_fft", c.features.n_fft);
    r.get_double("features.fmin", c.features.fmin);
    r.get_double("features.fmax", c.features.fmax);
    r.get_double("features.log_floor", c.features.log_floor);
    r.get_int("features.frames", c.frames);

    r.get_int("encoder.conv_channels", c.encoder.conv_channels);
    r.get_int("encoder.embed_dim", c.encoder.embed_dim);
    r.get_int("encoder.codebook_size", c.encoder.codebook_size);
    r.get_int("encoder.context_dim", c.encoder.context_dim);
    r.get_int("encoder.cpc_horizon", c.encoder.cpc_horizon);
    r.get_int("encoder.cpc_negatives", c.encoder.cpc_negatives);
    r.get_double("encoder.commit_beta", c.encoder.commit_beta);
    r.get_bool("encoder.layer_norm", c.encoder.layer_norm);

    r.get_int("vocoder.code_embed_dim", c.vocoder.code_embed_dim);
    r.get_int("vocoder.speaker_embed_dim", c.vocoder.speaker_embed_dim);
    r.get_int("vocoder.n_speakers", c.vocoder.n_speakers);
    r.get_int("vocoder.lstm_hidden", c.vocoder.lstm_hidden);
    r.get_int("vocoder.sample_embed_dim", c.vocoder.sample_embed_dim);
    r.get_int("vocoder.head_hidden", c.vocoder.head_hidden);
    r.get_int("vocoder.mulaw_channels", c.vocoder.mulaw_channels);
    r.get_int("vocoder.s1", c.vocoder.chain.s1);
    r.get_int("vocoder.s2", c.vocoder.chain.s2);
    if (r.has("vocoder.upsampler1")) {
        r.get_string("vocoder.upsampler1", s);
        c.vocoder.up1 = upsampler_from_string(s);
    }
    if (r.has("vocoder.upsampler2")) {
        r.get_string("vocoder.upsampler2", s);
        c.vocoder.up2 = upsampler_from_string(s);
    }

    if (r.has("scheduler.kind")) {
        r.get_string("scheduler.kind", s);
        c.sched.kind = schedule_kind_from_string(s);
    }
    r.get_int("scheduler.total_steps", c.sched.total_steps);
    r.get_double("scheduler.base_lr", c.sched.base_lr);
    r.get_double("scheduler.max_lr", c.sched.max_lr);
    r.get_double("scheduler.final_lr", c.sched.final_lr);
    r.get_int_array("scheduler.milestones", c.sched.milestones);
    r.get_double("scheduler.milestone_factor", c.sched.milestone_factor);
    r.get_double("scheduler.cycle_fraction", c.sched.cycle_fraction);
    r.get_bool("scheduler.linear_decay", c.sched.linear_decay);
    r.get_int("scheduler.step_size", c.sched.step_size);
    r.get_int("scheduler.t0", c.sched.t0);
    r.get_double("scheduler.t_mult", c.sched.t_mult);

    r.get_int("train.batch_size", c.train.batch_size);
    r.get_int("train.checkpoint_every", c.train.checkpoint_every);
    r.get_int("train.log_every", c.train.log_every);
    r.get_double("train.clip_norm", c.train.clip_norm);
    r.get_int("train.val_batches", c.train.val_batches);
    r.get_int("train.codebook_patience", c.train.codebook_patience);

    if (r.has("eval.abx_metric")) {
        r.get_string("eval.abx_metric", s);
        c.eval.abx_metric = metrics::frame_metric_from_string(s);
    }
    if (r.has("eval.abx_mode")) {
        r.get_string("eval.abx_mode", s);
        c.eval.abx_mode = metrics::abx_mode_from_string(s);
    }
    r.get_int("eval.abx_budget", c.eval.abx_budget);
    r.get_bool("eval.collapse_runs", c.eval.collapse_runs);

    r.finish();
}

}  // namespace

// ---------------------------------------------------------------- run config

void RunConfig::finalize() {
    // Derived links between sections: one source of truth each.
    encoder.n_mels = features.n_mels;
    vocoder.unit_vocab = encoder.codebook_size;
    vocoder.sample_rate = features.sample_rate;
    vocoder.chain.hop = features.hop;

    features.validate();
    if (frames < 2 || frames % 2 != 0)
        throw ConfigError("features.frames: must be even and >= 2 so windows cover whole units");
    if (frames / 2 <= encoder.cpc_horizon)
        throw ConfigError("features.frames: window yields " + std::to_string(frames / 2) +
                          " units, not enough for encoder.cpc_horizon " +
                          std::to_string(encoder.cpc_horizon));
    encoder.validate();
    validate_scale_chain(vocoder.chain);
    vocoder.validate();
    sched.validate();
    if (train.batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
    if (train.clip_norm <= 0) throw ConfigError("train.clip_norm: must be positive");
    if (train.checkpoint_every < 1) throw ConfigError("train.checkpoint_every: must be >= 1");
    if (train.log_every < 1) throw ConfigError("train.log_every: must be >= 1");
    if (train.val_batches < 1) throw ConfigError("train.val_batches: must be >= 1");
    if (train.codebook_patience < 1) throw ConfigError("train.codebook_patience: must be >= 1");
    if (eval.abx_budget < 1) throw ConfigError("eval.abx_budget: must be >= 1");
    if (data.chunk_seconds < 0) throw ConfigError("data.chunk_seconds: must be >= 0");
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["preset"] = preset;
    j["seed"] = seed;
    j["data"] = {{"manifest", data.manifest}, {"dir", data.dir}, {"chunk_seconds", data.chunk_seconds}};
    j["features"] = {{"sample_rate", features.sample_rate}, {"n_mels", features.n_mels},
                     {"win_ms", features.win_ms},           {"hop", features.hop},
                     {"n_fft", features.n_fft},             {"fmin", features.fmin},
                     {"fmax", features.fmax},               {"log_floor", features.log_floor},
                     {"frames", frames}};
    j["encoder"] = {{"conv_channels", encoder.conv_channels},
                    {"embed_dim", encoder.embed_dim},
                    {"codebook_size", encoder.codebook_size},
                    {"context_dim", encoder.context_dim},
                    {"cpc_horizon", encoder.cpc_horizon},
                    {"cpc_negatives", encoder.cpc_negatives},
                    {"commit_beta", encoder.commit_beta},
                    {"layer_norm", encoder.layer_norm}};
    j["vocoder"] = {{"code_embed_dim", vocoder.code_embed_dim},
                    {"speaker_embed_dim", vocoder.speaker_embed_dim},
                    {"n_speakers", vocoder.n_speakers},
                    {"lstm_hidden", vocoder.lstm_hidden},
                    {"sample_embed_dim", vocoder.sample_embed_dim},
                    {"head_hidden", vocoder.head_hidden},
                    {"mulaw_channels", vocoder.mulaw_channels},
                    {"s1", vocoder.chain.s1},
                    {"s2", vocoder.chain.s2},
                    {"upsampler1", to_string(vocoder.up1)},
                    {"upsampler2", to_string(vocoder.up2)}};
    j["scheduler"] = {{"kind", to_string(sched.kind)},
                      {"total_steps", sched.total_steps},
                      {"base_lr", sched.base_lr},
                      {"max_lr", sched.max_lr},
                      {"final_lr", sched.final_lr},
                      {"milestones", sched.milestones},
                      {"milestone_factor", sched.milestone_factor},
                      {"cycle_fraction", sched.cycle_fraction},
                      {"linear_decay", sched.linear_decay},
                      {"step_size", sched.step_size},
                      {"t0", sched.t0},
                      {"t_mult", sched.t_mult}};
    j["train"] = {{"batch_size", train.batch_size},
                  {"checkpoint_every", train.checkpoint_every},
                  {"log_every", train.log_every},
                  {"clip_norm", train.clip_norm},
                  {"val_batches", train.val_batches},
                  {"codebook_patience", train.codebook_patience}};
    j["eval"] = {{"abx_metric", metrics::to_string(eval.abx_metric)},
                 {"abx_mode", eval.abx_mode == metrics::AbxMode::within ? "within" : "across"},
                 {"abx_budget", eval.abx_budget},
                 {"collapse_runs", eval.collapse_runs}};
    return j;
}

std::string RunConfig::hash() const { return hash_hex(fnv1a64(to_json().dump())); }

// ---------------------------------------------------------------- presets

namespace {

void set_oclr(ScheduleConfig& s, std::int64_t total, double max_lr) {
    s.kind = ScheduleKind::oclr;
    s.total_steps = total;
    s.max_lr = max_lr;
    s.base_lr = max_lr / 25.0;
    s.final_lr = max_lr / 1e4;
    s.cycle_fraction = 0.3;
    s.milestones.clear();
}

void set_multistep(ScheduleConfig& s, std::int64_t total, double base_lr,
                   std::vector<std::int64_t> milestones) {
    s.kind = ScheduleKind::multistep;
    s.total_steps = total;
    s.base_lr = base_lr;
    s.max_lr = base_lr;
    s.final_lr = base_lr * std::pow(0.5, static_cast<double>(milestones.size()));
    s.milestones = std::move(milestones);
    s.milestone_factor = 0.5;
}

RunConfig toy_base() {
    RunConfig c;
    c.features.sample_rate = 4000;
    c.features.n_mels = 32;
    c.features.win_ms = 16.0;
    c.features.hop = 16;
    c.features.n_fft = 128;
    c.features.fmax = 2000.0;
    c.frames = 16;
    c.encoder.conv_channels = 32;
    c.encoder.embed_dim = 8;
    c.encoder.codebook_size = 32;
    c.encoder.context_dim = 32;
    c.vocoder.code_embed_dim = 16;
    c.vocoder.speaker_embed_dim = 8;
    c.vocoder.n_speakers = 4;
    c.vocoder.lstm_hidden = 48;
    c.vocoder.sample_embed_dim = 16;
    c.vocoder.head_hidden = 64;
    c.vocoder.chain = {4, 8, 16};
    c.train.batch_size = 8;
    c.train.checkpoint_every = 100;
    c.train.log_every = 10;
    return c;
}

}  // namespace

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.preset = name;

    if (name == "baseline") {
        c.vocoder.chain = {2, 160, 160};
        c.frames = 32;
        set_multistep(c.sched, 160000, 4e-4, {50000, 75000, 100000, 125000, 150000});
    } else if (name == "balanced-30k" || name == "balanced-40k" || name == "balanced-60k") {
        c.vocoder.chain = {16, 20, 160};
        c.frames = 32;
        const std::int64_t steps = name == "balanced-30k" ? 30000 : name == "balanced-40k" ? 40000 : 60000;
        set_oclr(c.sched, steps, 4e-3);
    } else if (name == "fourier-60k") {
        c.features.hop = 128;
        c.frames = 64;
        c.vocoder.chain = {16, 16, 128};
        c.vocoder.up1 = Upsampler::fourier_pad;
        c.vocoder.up2 = Upsampler::fourier_pad;
        set_oclr(c.sched, 60000, 4e-3);
    } else if (name == "best-en" || name == "tamil" || name == "bengali") {
        c.features.hop = 80;
        c.frames = 102;
        c.vocoder.chain = {10, 16, 80};
        set_oclr(c.sched, 60000, 4e-3);
    } else if (name == "hires-24k") {
        // Alternate front end at 24 kHz with the 12.5 ms shift (hop 300).
        c.features.sample_rate = 24000;
        c.features.hop = 300;
        c.features.fmax = 12000.0;
        c.frames = 32;
        c.vocoder.chain = {2, 300, 300};
        set_multistep(c.sched, 160000, 4e-4, {50000, 75000, 100000, 125000, 150000});
    } else if (name == "toy-multistep") {
        c = toy_base();
        c.preset = name;
        set_multistep(c.sched, 320, 4e-4, {100, 150, 200, 250, 300});
    } else if (name == "toy-oclr") {
        c = toy_base();
        c.preset = name;
        set_oclr(c.sched, 96, 4e-3);  // 30% of the toy multistep budget
    } else {
        throw ConfigError("unknown preset: " + name);
    }

    c.finalize();
    return c;
}

std::vector<std::string> preset_names() {
    return {"baseline", "balanced-30k", "balanced-40k",  "balanced-60k", "fourier-60k", "best-en",
            "tamil",    "bengali",      "hires-24k",     "toy-multistep", "toy-oclr"};
}

RunConfig parse_config(const std::string& path, const std::string& preset_override) {
    auto table = parse_toml(read_file(path));

    std::string preset = preset_override;
    if (preset.empty()) {
        auto it = table.find("preset");
        if (it != table.end()) {
            if (it->second.kind != TomlValue::Kind::string_) throw ConfigError("preset: expected string");
            preset = it->second.s;
        }
    }

    RunConfig c;
    if (!preset.empty()) c = preset_config(preset);

    ConfigReader reader(std::move(table));
    apply_table(reader, c);
    c.preset = preset;
    c.finalize();
    return c;
}

}  // namespace zrlab
