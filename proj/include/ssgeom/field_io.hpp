#pragma once

// Field definition files:
//
//   { "dim": n, "rank": m, "index": nu,
//     "entries": [ { "j": 1, "k": 3, "expr": "-0.5*x2" }, ... ] }
//
// Indices are 1-based, only j <= k may be listed, unlisted entries are zero.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cometric.hpp"
#include "models.hpp"

namespace ssgeom {

struct FieldFormatError : GeometryError {
    using GeometryError::GeometryError;
};

inline CometricField field_from_json(const nlohmann::json& doc) {
    try {
        const int n = doc.at("dim").get<int>();
        const int m = doc.at("rank").get<int>();
        const int nu = doc.at("index").get<int>();
        std::vector<CometricField::Entry> upper;
        std::vector<bool> seen(static_cast<std::size_t>(n > 0 ? n * n : 0), false);
        for (const auto& e : doc.at("entries")) {
            const int j = e.at("j").get<int>(), k = e.at("k").get<int>();
            if (j < 1 || k < 1 || j > n || k > n)
                throw FieldFormatError("entry (" + std::to_string(j) + "," + std::to_string(k) + ") out of range");
            if (j > k)
                throw FieldFormatError("entry (" + std::to_string(j) + "," + std::to_string(k) +
                                       ") has j > k; list the upper triangle only");
            auto s = seen[static_cast<std::size_t>((j - 1) * n + (k - 1))];
            if (s) throw FieldFormatError("duplicate entry (" + std::to_string(j) + "," + std::to_string(k) + ")");
            s = true;
            upper.push_back({j - 1, k - 1, parse(e.at("expr").get<std::string>(), n)});
        }
        return CometricField::from_upper(n, m, nu, upper);
    } catch (const nlohmann::json::exception& ex) {
        throw FieldFormatError(std::string("malformed field definition: ") + ex.what());
    } catch (const ParseError& ex) {
        throw FieldFormatError(std::string("bad expression: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
        throw FieldFormatError(ex.what());
    }
}

inline CometricField load_field_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FieldFormatError("cannot open field file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& ex) {
        throw FieldFormatError(std::string("malformed JSON in ") + path + ": " + ex.what());
    }
    return field_from_json(doc);
}

// Model id or path to a field definition file.
inline CometricField resolve_field(const std::string& spec) {
    if (const auto id = parse_model_id(spec)) return model_field(*id);
    return load_field_file(spec);
}

// Inverse of field_from_json.
inline nlohmann::json field_to_json(const CometricField& f) {
    nlohmann::json doc{{"dim", f.dim()}, {"rank", f.rank()}, {"index", f.index()}, {"entries", nlohmann::json::array()}};
    for (int j = 0; j < f.dim(); ++j)
        for (int k = j; k < f.dim(); ++k)
            if (!f.entry(j, k).is_zero())
                doc["entries"].push_back({{"j", j + 1}, {"k", k + 1}, {"expr", to_string(f.entry(j, k))}});
    return doc;
}

}  // namespace ssgeom
