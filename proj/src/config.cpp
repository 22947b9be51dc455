#include "mamnet/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mamnet/error.hpp"

namespace mamnet {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("key '" + key + "': cannot parse '" + value + "' as a number");
    }
    return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("key '" + key + "': cannot parse '" + value +
                          "' as a non-negative integer");
    }
    return v;
}

std::size_t to_size(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(to_u64(key, value));
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    throw ConfigError("key '" + key + "': cannot parse '" + value + "' as a boolean");
}

std::vector<std::uint64_t> to_u64_list(const std::string& key, const std::string& value) {
    std::vector<std::uint64_t> out;
    std::string piece;
    std::istringstream in(value);
    while (std::getline(in, piece, ',')) {
        const std::string t = trim(piece);
        if (!t.empty()) out.push_back(to_u64(key, t));
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    if (pipeline.window.width != model.window_len) {
        throw ConfigError("config: pipeline window width must equal window_w");
    }
    if (batch_size == 0) {
        throw ConfigError("config: batch_size must be >= 1");
    }
    if (validation_fraction <= 0.0 || validation_fraction >= 1.0) {
        throw ConfigError("config: validation_fraction must be in (0, 1)");
    }
    synth.validate();
}

void apply_config_kv(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "task") {
        c.model.task = task_from_string(value);
        c.pipeline.window.regress_next = c.model.task == Task::regress;
    } else if (key == "variant") {
        c.model.variant = variant_from_string(value);
    } else if (key == "window_w") {
        c.model.window_len = to_size(key, value);
        c.pipeline.window.width = c.model.window_len;
    } else if (key == "window_hop") {
        c.pipeline.window.hop = to_size(key, value);
    } else if (key == "state_dim") {
        c.model.state_dim = to_size(key, value);
    } else if (key == "fusion_dim") {
        c.model.fusion_dim = to_size(key, value);
    } else if (key == "spectral_bins") {
        c.model.spectral_bins = to_size(key, value);
    } else if (key == "dropout_rate") {
        c.model.dropout_rate = to_double(key, value);
    } else if (key == "threshold") {
        c.model.threshold = to_double(key, value);
    } else if (key == "spectral_taper") {
        if (value == "rect") c.model.taper = Taper::rectangular;
        else if (value == "hann") c.model.taper = Taper::hann;
        else throw ConfigError("key 'spectral_taper': expected rect or hann, got '" + value + "'");
    } else if (key == "ssm_pool") {
        if (value == "mean") c.model.pool = PoolMode::mean;
        else if (value == "last") c.model.pool = PoolMode::last;
        else throw ConfigError("key 'ssm_pool': expected mean or last, got '" + value + "'");
    } else if (key == "label_rule") {
        if (value == "any") c.pipeline.window.rule = LabelRule::any;
        else if (value == "fraction") c.pipeline.window.rule = LabelRule::fraction;
        else throw ConfigError("key 'label_rule': expected any or fraction, got '" + value + "'");
    } else if (key == "label_fraction") {
        c.pipeline.window.fraction = to_double(key, value);
    } else if (key == "split_fraction") {
        c.pipeline.split_fraction = to_double(key, value);
    } else if (key == "validation_fraction") {
        c.validation_fraction = to_double(key, value);
    } else if (key == "correlation_filter") {
        c.pipeline.correlation = to_bool(key, value);
    } else if (key == "correlation_threshold") {
        c.pipeline.correlation_threshold = to_double(key, value);
    } else if (key == "rfe_keep") {
        c.pipeline.rfe_keep = to_size(key, value);
    } else if (key == "balance") {
        c.pipeline.balance = balance_mode_from_string(value);
    } else if (key == "balance_ratio") {
        c.pipeline.balance_ratio = to_double(key, value);
    } else if (key == "epochs") {
        c.epochs = to_size(key, value);
    } else if (key == "batch_size") {
        c.batch_size = to_size(key, value);
    } else if (key == "learning_rate") {
        c.learning_rate = to_double(key, value);
    } else if (key == "seed") {
        c.seed = to_u64(key, value);
        c.synth.seed = c.seed;
    } else if (key == "seeds") {
        c.seeds = to_u64_list(key, value);
    } else if (key == "ablate_variants") {
        c.ablate_variants.clear();
        std::istringstream in(value);
        std::string piece;
        while (std::getline(in, piece, ',')) {
            const std::string t = trim(piece);
            if (!t.empty()) c.ablate_variants.push_back(variant_from_string(t));
        }
        if (c.ablate_variants.empty()) {
            throw ConfigError("key 'ablate_variants': empty list");
        }
    } else if (key == "label_column") {
        c.label_column = value;
    } else if (key == "data") {
        c.data_path = value;
    } else if (key == "model") {
        c.model_path = value;
    } else if (key == "out") {
        c.out_path = value;
    } else if (key == "report") {
        c.report_path = value;
    } else if (key == "grid") {
        c.grid = value;
    } else if (key == "synth_length") {
        c.synth.length = to_size(key, value);
    } else if (key == "synth_features") {
        c.synth.features = to_size(key, value);
    } else if (key == "synth_baselines") {
        c.synth.baselines = parse_double_list(value);
    } else if (key == "synth_sines") {
        c.synth.sines = parse_sines(value);
    } else if (key == "synth_ar_phi") {
        c.synth.ar_phi = to_double(key, value);
    } else if (key == "synth_ar_sigma") {
        c.synth.ar_sigma = to_double(key, value);
    } else if (key == "synth_events") {
        c.synth.events = parse_events(value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected key = value, got '" + t + "'");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        try {
            apply_config_kv(config, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    os << "task = " << to_string(c.model.task) << "\n";
    os << "variant = " << to_string(c.model.variant) << "\n";
    os << "window_w = " << c.model.window_len << "\n";
    os << "window_hop = " << c.pipeline.window.hop << "\n";
    os << "state_dim = " << c.model.state_dim << "\n";
    os << "fusion_dim = " << c.model.fusion_dim << "\n";
    os << "spectral_bins = " << c.model.spectral_bins << "\n";
    os << "dropout_rate = " << format_double(c.model.dropout_rate) << "\n";
    os << "threshold = " << format_double(c.model.threshold) << "\n";
    os << "spectral_taper = " << (c.model.taper == Taper::hann ? "hann" : "rect") << "\n";
    os << "ssm_pool = " << (c.model.pool == PoolMode::last ? "last" : "mean") << "\n";
    os << "label_rule = "
       << (c.pipeline.window.rule == LabelRule::fraction ? "fraction" : "any") << "\n";
    os << "label_fraction = " << format_double(c.pipeline.window.fraction) << "\n";
    os << "split_fraction = " << format_double(c.pipeline.split_fraction) << "\n";
    os << "validation_fraction = " << format_double(c.validation_fraction) << "\n";
    os << "correlation_filter = " << (c.pipeline.correlation ? "true" : "false") << "\n";
    os << "correlation_threshold = " << format_double(c.pipeline.correlation_threshold)
       << "\n";
    os << "rfe_keep = " << c.pipeline.rfe_keep << "\n";
    os << "balance = " << to_string(c.pipeline.balance) << "\n";
    os << "balance_ratio = " << format_double(c.pipeline.balance_ratio) << "\n";
    os << "epochs = " << c.epochs << "\n";
    os << "batch_size = " << c.batch_size << "\n";
    os << "learning_rate = " << format_double(c.learning_rate) << "\n";
    os << "seed = " << c.seed << "\n";
    os << "seeds = ";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) {
        if (i) os << ", ";
        os << c.seeds[i];
    }
    os << "\n";
    os << "ablate_variants = ";
    for (std::size_t i = 0; i < c.ablate_variants.size(); ++i) {
        if (i) os << ", ";
        os << to_string(c.ablate_variants[i]);
    }
    os << "\n";
    os << "label_column = " << c.label_column << "\n";
    os << "data = " << c.data_path << "\n";
    os << "model = " << c.model_path << "\n";
    os << "out = " << c.out_path << "\n";
    os << "report = " << c.report_path << "\n";
    os << "grid = " << c.grid << "\n";
    os << "synth_length = " << c.synth.length << "\n";
    os << "synth_features = " << c.synth.features << "\n";
    os << "synth_baselines = " << double_list_to_string(c.synth.baselines) << "\n";
    os << "synth_sines = " << sines_to_string(c.synth.sines) << "\n";
    os << "synth_ar_phi = " << format_double(c.synth.ar_phi) << "\n";
    os << "synth_ar_sigma = " << format_double(c.synth.ar_sigma) << "\n";
    os << "synth_events = " << events_to_string(c.synth.events) << "\n";
    return os.str();
}

std::string config_hash(const RunConfig& config) {
    const std::string text = serialize_config(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace mamnet
