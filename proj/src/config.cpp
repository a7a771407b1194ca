#include "revswitch/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "revswitch/error.hpp"
#include "revswitch/numerics.hpp"

namespace revswitch::config {

using Json = nlohmann::json;

namespace {

int line_at(const std::string& text, std::size_t pos) {
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + std::min(pos, text.size()), '\n'));
}

// "a.b[2].c" -> {"a", "b", "c"}; array indices do not appear as keys.
std::vector<std::string> keys_of(const std::string& path) {
    std::vector<std::string> keys;
    std::string cur;
    bool in_index = false;
    for (char c : path) {
        if (c == '[') in_index = true;
        else if (c == ']') in_index = false;
        else if (in_index) continue;
        else if (c == '.') {
            if (!cur.empty()) keys.push_back(cur);
            cur.clear();
        } else cur += c;
    }
    if (!cur.empty()) keys.push_back(cur);
    return keys;
}

std::string type_name(const Json& j) { return j.type_name(); }

} // namespace

Document Document::parse(std::string text, std::string source) {
    Document d;
    d.text_ = std::move(text);
    d.source_ = std::move(source);
    try {
        d.root_ = Json::parse(d.text_);
    } catch (const Json::parse_error& e) {
        const int line = line_at(d.text_, e.byte > 0 ? e.byte - 1 : 0);
        std::ostringstream os;
        os << d.source_ << ":" << line << ": malformed JSON: " << e.what();
        throw ConfigError("", os.str());
    }
    if (!d.root_.is_object()) throw ConfigError("", d.source_ + ":1: top level must be a JSON object");
    return d;
}

Document Document::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot read config file " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse(os.str(), path.string());
}

int Document::line_of(const std::string& path) const {
    std::size_t pos = 0;
    int line = 0;
    for (const auto& key : keys_of(path)) {
        const auto hit = text_.find("\"" + key + "\"", pos);
        if (hit == std::string::npos) break;
        pos = hit + key.size() + 2;
        line = line_at(text_, hit);
    }
    return line;
}

void fail(const Document& doc, const std::string& path, const std::string& message) {
    std::ostringstream os;
    os << doc.source() << ":";
    if (const int line = doc.line_of(path); line > 0) os << line << ":";
    os << " field '" << path << "': " << message;
    throw ConfigError(path, os.str());
}

Node::Node(const Document& doc, const Json& value, std::string path)
    : doc_(&doc), value_(&value), path_(std::move(path)) {
    if (!value.is_object()) config::fail(doc, path_.empty() ? "<root>" : path_, "expected an object");
}

std::string Node::child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool Node::has(const std::string& key) const { return value_->contains(key); }

void Node::fail(const std::string& key, const std::string& message) const {
    config::fail(*doc_, key.empty() ? path_ : child_path(key), message);
}

const Json& Node::get(const std::string& key) const {
    const auto it = value_->find(key);
    if (it == value_->end()) fail(key, "required field missing");
    return *it;
}

Node Node::child(const std::string& key) const {
    const Json& v = get(key);
    if (!v.is_object()) fail(key, "expected an object, got " + type_name(v));
    return Node(*doc_, v, child_path(key));
}

std::optional<Node> Node::optional_child(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return child(key);
}

std::vector<Node> Node::elements(const std::string& key) const {
    const Json& v = get(key);
    if (!v.is_array()) fail(key, "expected an array, got " + type_name(v));
    std::vector<Node> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = child_path(key) + "[" + std::to_string(i) + "]";
        if (!v[i].is_object()) config::fail(*doc_, p, "expected an object, got " + type_name(v[i]));
        out.emplace_back(*doc_, v[i], p);
    }
    return out;
}

double Node::number(const std::string& key) const {
    const Json& v = get(key);
    if (!v.is_number()) fail(key, "expected a number, got " + type_name(v));
    return v.get<double>();
}

double Node::number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

double Node::positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) fail(key, "must be > 0");
    return v;
}

int Node::integer(const std::string& key, int fallback, int min_value) const {
    int v = fallback;
    if (has(key)) {
        const Json& j = get(key);
        if (!j.is_number_integer()) fail(key, "expected an integer, got " + type_name(j));
        v = j.get<int>();
    }
    if (v < min_value) fail(key, "must be >= " + std::to_string(min_value));
    return v;
}

bool Node::boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& j = get(key);
    if (!j.is_boolean()) fail(key, "expected a boolean, got " + type_name(j));
    return j.get<bool>();
}

std::string Node::string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const Json& j = get(key);
    if (!j.is_string()) fail(key, "expected a string, got " + type_name(j));
    return j.get<std::string>();
}

std::vector<double> Node::numbers(const std::string& key) const {
    const Json& j = get(key);
    if (!j.is_array()) fail(key, "expected an array of numbers, got " + type_name(j));
    std::vector<double> out;
    for (const auto& e : j) {
        if (!e.is_number()) fail(key, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Eigen::MatrixXd Node::matrix(const std::string& key, int rows, int cols) const {
    const Json& j = get(key);
    const std::string shape = std::to_string(rows) + "x" + std::to_string(cols);
    if (!j.is_array() || static_cast<int>(j.size()) != rows) fail(key, "expected a " + shape + " nested array");
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const Json& row = j[r];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) fail(key, "expected a " + shape + " nested array");
        for (int c = 0; c < cols; ++c) {
            if (!row[c].is_number()) fail(key, "matrix entries must be numbers");
            m(r, c) = row[c].get<double>();
        }
    }
    return m;
}

void Node::only(const std::vector<std::string>& allowed) const {
    for (const auto& [key, _] : value_->items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(key, "unknown field");
}

kernels::KernelSpec parse_kernel(const Node& node) {
    node.only({"dirac", "terms", "lmax"});
    const double dirac = node.number("dirac", 0.0);
    const int lmax = node.integer("lmax", kernels::default_lmax, 1);
    std::vector<kernels::Term> terms;
    if (node.has("terms")) {
        for (const auto& t : node.elements("terms")) {
            const std::string type = t.string("type", "");
            if (type == "cosine") {
                t.only({"type", "coeffs"});
                terms.push_back(kernels::CosineSeries{t.numbers("coeffs")});
            } else if (type == "bessel") {
                t.only({"type", "eta", "beta", "amplitude"});
                terms.push_back(kernels::BesselSmoothed{t.positive("eta", 1.0), t.positive("beta", 1.0),
                                                        t.number("amplitude", 1.0)});
            } else if (type == "gaussian") {
                t.only({"type", "amplitude", "width"});
                terms.push_back(kernels::PeriodizedGaussian{t.number("amplitude", 1.0), t.positive("width", 1.0)});
            } else if (type == "exponential") {
                t.only({"type", "eta", "amplitude"});
                terms.push_back(kernels::PeriodizedExponential{t.positive("eta", 1.0), t.number("amplitude", 1.0)});
            } else {
                t.fail("type", "unknown term type '" + type + "' (cosine, bessel, gaussian, exponential)");
            }
        }
    }
    try {
        return kernels::KernelSpec(dirac, std::move(terms), lmax);
    } catch (const Error& e) {
        node.fail("", e.what());
    }
}

kernels::KernelFamily parse_family(const Node& node) {
    using kernels::KernelSpec;
    const std::string name = node.string("name", "");
    const KernelSpec slope = KernelSpec::cosine({0.0, -1.0});
    if (name == "cosine") {
        node.only({"name", "lmax"});
        const int lmax = node.integer("lmax", kernels::default_lmax, 1);
        return {KernelSpec::cosine({0.0, -1.0 / pi}, 1.0, lmax), slope.with_lmax(lmax)};
    }
    if (name == "harmonics") {
        node.only({"name", "coefficients", "lmax"});
        const int lmax = node.integer("lmax", kernels::default_lmax, 1);
        std::vector<double> c{0.0, -1.0 / pi};
        const std::vector<double> extra = node.has("coefficients") ? node.numbers("coefficients")
                                                                   : std::vector<double>{3.0 / 20.0, 0.1};
        c.insert(c.end(), extra.begin(), extra.end());
        return {KernelSpec::cosine(c, 1.0, lmax), slope.with_lmax(lmax)};
    }
    if (name == "bessel") {
        node.only({"name", "eta", "beta", "amplitude", "lmax"});
        const int lmax = node.integer("lmax", kernels::default_lmax, 1);
        const kernels::BesselSmoothed b{node.positive("eta", 0.5), node.positive("beta", 1.0),
                                        node.number("amplitude", 1.0)};
        return {KernelSpec(0.0, {b}, lmax), slope.with_lmax(lmax)};
    }
    if (name == "exponential") {
        node.only({"name", "eta", "amplitude", "lmax"});
        const int lmax = node.integer("lmax", kernels::default_lmax, 1);
        const kernels::PeriodizedExponential e{node.positive("eta", 0.3), node.number("amplitude", 1.0)};
        return {KernelSpec(0.0, {e, kernels::CosineSeries{{0.0, -1.0 / pi}}}, lmax), slope.with_lmax(lmax)};
    }
    if (name == "custom") {
        node.only({"name", "base", "slope"});
        return {parse_kernel(node.child("base")), parse_kernel(node.child("slope"))};
    }
    node.fail("name", "unknown kernel family '" + name + "' (cosine, harmonics, bessel, exponential, custom)");
}

} // namespace revswitch::config
