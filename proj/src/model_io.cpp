#include "dbn/model_io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dbn/errors.hpp"

namespace dbn {

using nlohmann::json;

namespace {

const json& field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw ParseError(path + ": expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError((path.empty() ? std::string() : path + ": ") + "missing field \"" + key + "\"");
    }
    return *it;
}

std::string child(const std::string& path, const char* key) {
    return path.empty() ? std::string(key) : path + "." + key;
}

std::string child(const std::string& path, std::size_t index) {
    return path + "[" + std::to_string(index) + "]";
}

std::size_t read_index(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        throw ParseError(path + ": expected a nonnegative integer");
    }
    return j.get<std::size_t>();
}

std::vector<double> read_vector(const json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(child(path, i) + ": expected a number");
        out.push_back(j[i].get<double>());
    }
    return out;
}

Matrix read_matrix(const json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path + ": expected an array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < j.size(); ++r) {
        rows.push_back(read_vector(j[r], child(path, r)));
        if (rows.back().size() != rows.front().size()) {
            throw ParseError(child(path, r) + ": row length " + std::to_string(rows.back().size()) +
                             " differs from row 0 length " + std::to_string(rows.front().size()));
        }
    }
    return Matrix::from_rows(rows);
}

std::vector<std::size_t> read_indices(const json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path + ": expected an array of indices");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_index(j[i], child(path, i)));
    return out;
}

HmmModel parse_hmm(const json& doc) {
    HmmModel m;
    m.num_states = read_index(field(doc, "num_states", ""), "num_states");
    m.num_symbols = read_index(field(doc, "num_symbols", ""), "num_symbols");
    m.pi = read_vector(field(doc, "pi", ""), "pi");
    m.trans = read_matrix(field(doc, "A", ""), "A");
    m.emit = read_matrix(field(doc, "B", ""), "B");
    validate_hmm(m);
    return m;
}

ChmmModel parse_chmm(const json& doc) {
    ChmmModel m;
    const json& chains = field(doc, "chains", "");
    if (!chains.is_array()) throw ParseError("chains: expected an array");
    for (std::size_t l = 0; l < chains.size(); ++l) {
        const std::string path = child("chains", l);
        ChmmChain c;
        c.num_states = read_index(field(chains[l], "states", path), child(path, "states"));
        c.num_symbols = read_index(field(chains[l], "symbols", path), child(path, "symbols"));
        c.pi = read_vector(field(chains[l], "pi", path), child(path, "pi"));
        c.emit = read_matrix(field(chains[l], "emit", path), child(path, "emit"));
        m.chains.push_back(std::move(c));
    }
    const json& couplings = field(doc, "couplings", "");
    if (!couplings.is_array()) throw ParseError("couplings: expected an array");
    for (std::size_t k = 0; k < couplings.size(); ++k) {
        const std::string path = child("couplings", k);
        Coupling c;
        c.from = read_index(field(couplings[k], "from", path), child(path, "from"));
        c.to = read_index(field(couplings[k], "to", path), child(path, "to"));
        c.matrix = read_matrix(field(couplings[k], "matrix", path), child(path, "matrix"));
        m.couplings.push_back(std::move(c));
    }
    validate_chmm(m);
    return m;
}

Tbn2Model parse_tbn(const json& doc) {
    Tbn2Model m;
    const json& vars = field(doc, "vars", "");
    if (!vars.is_array()) throw ParseError("vars: expected an array");
    for (std::size_t v = 0; v < vars.size(); ++v) {
        const std::string path = child("vars", v);
        const json& obj = vars[v];
        TbnVariable var;
        var.card = read_index(field(obj, "card", path), child(path, "card"));
        if (obj.contains("observed")) {
            if (!obj["observed"].is_boolean()) throw ParseError(child(path, "observed") + ": expected a boolean");
            var.observed = obj["observed"].get<bool>();
        }
        if (!var.observed || obj.contains("init_parents") || obj.contains("init_cpt")) {
            var.init_parents = read_indices(field(obj, "init_parents", path), child(path, "init_parents"));
            var.init_cpt = read_matrix(field(obj, "init_cpt", path), child(path, "init_cpt"));
        }
        const json& tp = field(obj, "trans_parents", path);
        if (!tp.is_array()) throw ParseError(child(path, "trans_parents") + ": expected an array");
        for (std::size_t k = 0; k < tp.size(); ++k) {
            const std::string ppath = child(child(path, "trans_parents"), k);
            TbnParent p;
            const std::size_t slice = read_index(field(tp[k], "slice", ppath), child(ppath, "slice"));
            if (slice > 1) throw ParseError(child(ppath, "slice") + ": must be 0 or 1");
            p.slice = static_cast<int>(slice);
            p.var = read_index(field(tp[k], "var", ppath), child(ppath, "var"));
            var.trans_parents.push_back(p);
        }
        var.trans_cpt = read_matrix(field(obj, "trans_cpt", path), child(path, "trans_cpt"));
        m.vars.push_back(std::move(var));
    }
    validate_tbn(m);
    return m;
}

json to_json(const HmmModel& m) {
    return json{{"type", "hmm"},
                {"num_states", m.num_states},
                {"num_symbols", m.num_symbols},
                {"pi", m.pi},
                {"A", m.trans.to_rows()},
                {"B", m.emit.to_rows()}};
}

json to_json(const ChmmModel& m) {
    json chains = json::array();
    for (const auto& c : m.chains) {
        chains.push_back({{"states", c.num_states},
                          {"symbols", c.num_symbols},
                          {"pi", c.pi},
                          {"emit", c.emit.to_rows()}});
    }
    json couplings = json::array();
    for (const auto& c : m.couplings) {
        couplings.push_back({{"from", c.from}, {"to", c.to}, {"matrix", c.matrix.to_rows()}});
    }
    return json{{"type", "chmm"}, {"chains", chains}, {"couplings", couplings}};
}

json to_json(const Tbn2Model& m) {
    json vars = json::array();
    for (const auto& v : m.vars) {
        json parents = json::array();
        for (const auto& p : v.trans_parents) parents.push_back({{"slice", p.slice}, {"var", p.var}});
        json obj{{"card", v.card}, {"trans_parents", parents}, {"trans_cpt", v.trans_cpt.to_rows()}};
        if (v.observed) obj["observed"] = true;
        if (!v.observed || !v.init_cpt.empty()) {
            obj["init_parents"] = v.init_parents;
            obj["init_cpt"] = v.init_cpt.to_rows();
        }
        vars.push_back(std::move(obj));
    }
    return json{{"type", "tbn2"}, {"vars", vars}};
}

std::size_t parse_symbol(std::string_view token) {
    std::size_t value = 0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (token.empty() || ec != std::errc() || ptr != last) {
        throw ParseError("invalid observation \"" + std::string(token) +
                         "\" (missing or partial observations are not supported)");
    }
    return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

bool blank(std::string_view line) { return split_ws(line).empty(); }

template <typename Seq, typename ParseLine>
std::vector<Seq> read_lines(std::istream& in, ParseLine parse_line) {
    std::vector<Seq> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (blank(line)) continue;
        try {
            out.push_back(parse_line(line));
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(number) + ": " + e.what());
        }
    }
    return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    return in;
}

}  // namespace

AnyModel parse_model(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    const json& type = field(doc, "type", "");
    if (!type.is_string()) throw ParseError("type: expected a string");
    const auto tag = type.get<std::string>();
    if (tag == "hmm") return parse_hmm(doc);
    if (tag == "chmm") return parse_chmm(doc);
    if (tag == "tbn2") return parse_tbn(doc);
    throw ParseError("type: unknown model type \"" + tag + "\"");
}

AnyModel load_model(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_model(buffer.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string model_to_json(const AnyModel& model) {
    return std::visit([](const auto& m) { return to_json(m).dump(2); }, model) + "\n";
}

void save_model(const AnyModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(path.string() + ": cannot open file for writing");
    out << model_to_json(model);
    if (!out) throw ParseError(path.string() + ": write failed");
}

ObsSequence parse_obs_line(std::string_view line) {
    ObsSequence out;
    for (auto token : split_ws(line)) out.push_back(parse_symbol(token));
    if (out.empty()) throw ParseError("empty observation sequence");
    return out;
}

MultiObsSequence parse_multi_obs_line(std::string_view line) {
    MultiObsSequence out;
    for (auto token : split_ws(line)) {
        std::vector<std::size_t> step;
        std::size_t begin = 0;
        while (true) {
            const auto comma = token.find(',', begin);
            step.push_back(parse_symbol(token.substr(begin, comma - begin)));
            if (comma == std::string_view::npos) break;
            begin = comma + 1;
        }
        if (!out.empty() && step.size() != out.front().size()) {
            throw ParseError("step " + std::to_string(out.size()) + " has " +
                             std::to_string(step.size()) + " chains, expected " +
                             std::to_string(out.front().size()));
        }
        out.push_back(std::move(step));
    }
    if (out.empty()) throw ParseError("empty observation sequence");
    return out;
}

std::vector<ObsSequence> read_obs(std::istream& in) {
    return read_lines<ObsSequence>(in, parse_obs_line);
}

std::vector<MultiObsSequence> read_multi_obs(std::istream& in) {
    return read_lines<MultiObsSequence>(in, parse_multi_obs_line);
}

std::vector<ObsSequence> load_obs(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return read_obs(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<MultiObsSequence> load_multi_obs(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return read_multi_obs(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string format_obs_line(const ObsSequence& seq) {
    std::string out;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        if (t) out += ' ';
        out += std::to_string(seq[t]);
    }
    return out;
}

std::string format_multi_obs_line(const MultiObsSequence& seq) {
    std::string out;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        if (t) out += ' ';
        for (std::size_t l = 0; l < seq[t].size(); ++l) {
            if (l) out += ',';
            out += std::to_string(seq[t][l]);
        }
    }
    return out;
}

}  // namespace dbn
