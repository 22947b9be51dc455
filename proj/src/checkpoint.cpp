#include "mamnet/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

#include "mamnet/error.hpp"

namespace mamnet {

namespace {

constexpr const char* kHeader = "mamnet-checkpoint v1";

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_value(const std::string& token, const std::string& what) {
    double v = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end) {
        throw DataError("checkpoint: bad number '" + token + "' in " + what);
    }
    return v;
}

void write_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
    out << "[tensor " << name << "]\n";
    out << "shape =";
    for (std::size_t d : t.shape()) out << " " << d;
    out << "\n";
    out << "data =";
    out.precision(17);
    for (std::size_t i = 0; i < t.size(); ++i) out << " " << t[i];
    out << "\n";
}

void write_doubles(std::ostream& out, const std::string& key,
                   const std::vector<double>& values) {
    out << key << " =";
    out.precision(17);
    for (double v : values) out << " " << v;
    out << "\n";
}

std::vector<double> read_doubles(const std::string& line, const std::string& what) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw DataError("checkpoint: malformed line in " + what);
    std::istringstream in(line.substr(eq + 1));
    std::vector<double> values;
    std::string token;
    while (in >> token) values.push_back(parse_value(token, what));
    return values;
}

}  // namespace

ModelConfig Checkpoint::model_config() const {
    ModelConfig mc = config.model;
    mc.feature_dim = feature_dim;
    return mc;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    std::ofstream out(path);
    if (!out) throw DataError("save_checkpoint: cannot write '" + path + "'");
    out << kHeader << "\n";
    out << "# config_hash = " << config_hash(checkpoint.config) << "\n";
    out << "[config]\n" << serialize_config(checkpoint.config);
    out << "feature_dim = " << checkpoint.feature_dim << "\n";

    out << "[features]\n";
    out << "indices =";
    for (std::size_t i : checkpoint.selected_features) out << " " << i;
    out << "\n";
    out << "names =";
    for (const auto& n : checkpoint.feature_names) out << " " << n;
    out << "\n";

    out << "[normstats]\n";
    out << "fitted_rows = " << checkpoint.stats.fitted_rows << "\n";
    write_doubles(out, "mins", checkpoint.stats.mins);
    write_doubles(out, "maxs", checkpoint.stats.maxs);

    ModelParams params = checkpoint.params;  // param_refs needs mutable access
    for (const ParamRef& ref : param_refs(params, checkpoint.config.model.variant)) {
        write_tensor(out, ref.name, *ref.tensor);
    }
    out << "[end]\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_checkpoint: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line) || trim(line) != kHeader) {
        throw DataError("load_checkpoint: '" + path + "' is not a '" +
                        std::string(kHeader) + "' file");
    }

    Checkpoint ck;
    std::vector<std::pair<std::string, Tensor>> tensors;
    std::string section;
    std::string config_text;
    bool saw_end = false;

    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t == "[end]") {
            saw_end = true;
            break;
        }
        if (t.rfind("[tensor ", 0) == 0 && t.back() == ']') {
            const std::string name = trim(t.substr(8, t.size() - 9));
            std::string shape_line, data_line;
            if (!std::getline(in, shape_line) || !std::getline(in, data_line)) {
                throw DataError("load_checkpoint: tensor '" + name + "' is truncated");
            }
            std::vector<std::size_t> shape;
            std::size_t expected = 1;
            for (double d : read_doubles(shape_line, "tensor " + name)) {
                shape.push_back(static_cast<std::size_t>(d));
                expected *= shape.back();
            }
            std::vector<double> values = read_doubles(data_line, "tensor " + name);
            if (values.size() != expected) {
                throw DataError("load_checkpoint: tensor '" + name + "' has " +
                                std::to_string(values.size()) + " values, expected " +
                                std::to_string(expected));
            }
            tensors.emplace_back(name, Tensor(shape, std::move(values)));
            continue;
        }
        if (t == "[config]" || t == "[features]" || t == "[normstats]") {
            section = t;
            continue;
        }
        if (section == "[config]") {
            if (t.rfind("feature_dim", 0) == 0) {
                ck.feature_dim = static_cast<std::size_t>(
                    read_doubles(t, "config.feature_dim").at(0));
            } else {
                config_text += t + "\n";
            }
        } else if (section == "[features]") {
            if (t.rfind("indices", 0) == 0) {
                for (double v : read_doubles(t, "features.indices")) {
                    ck.selected_features.push_back(static_cast<std::size_t>(v));
                }
            } else if (t.rfind("names", 0) == 0) {
                const std::size_t eq = t.find('=');
                std::istringstream names(t.substr(eq + 1));
                std::string n;
                while (names >> n) ck.feature_names.push_back(n);
            }
        } else if (section == "[normstats]") {
            if (t.rfind("fitted_rows", 0) == 0) {
                ck.stats.fitted_rows =
                    static_cast<std::size_t>(read_doubles(t, "normstats").at(0));
            } else if (t.rfind("mins", 0) == 0) {
                ck.stats.mins = read_doubles(t, "normstats.mins");
            } else if (t.rfind("maxs", 0) == 0) {
                ck.stats.maxs = read_doubles(t, "normstats.maxs");
            }
        } else {
            throw DataError("load_checkpoint: unexpected line '" + t + "'");
        }
    }
    if (!saw_end) throw DataError("load_checkpoint: missing [end] marker");

    try {
        ck.config = parse_config_text(config_text, path + " [config]");
    } catch (const ConfigError& e) {
        throw DataError(std::string("load_checkpoint: bad config block: ") + e.what());
    }
    if (ck.feature_dim == 0) {
        throw DataError("load_checkpoint: missing feature_dim");
    }

    ModelConfig mc = ck.model_config();
    mc.validate();
    ck.params = zeros_like(mc);
    std::vector<ParamRef> refs = param_refs(ck.params, mc.variant);
    for (ParamRef& ref : refs) {
        bool found = false;
        for (auto& [name, tensor] : tensors) {
            if (name == ref.name) {
                if (!ref.tensor->same_shape(tensor)) {
                    throw DataError("load_checkpoint: tensor '" + name +
                                    "' has the wrong shape for the config");
                }
                *ref.tensor = std::move(tensor);
                found = true;
                break;
            }
        }
        if (!found) {
            throw DataError("load_checkpoint: tensor '" + ref.name + "' is missing");
        }
    }
    if (tensors.size() != refs.size()) {
        throw DataError("load_checkpoint: unexpected extra tensors in file");
    }
    return ck;
}

}  // namespace mamnet
