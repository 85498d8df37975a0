#include <fstream>
#include <json.hpp>
#include <sstream>

#include "prophetlab/errors.hpp"
#include "prophetlab/model.hpp"

namespace prophetlab::model {

namespace {

using nlohmann::json;

json parse_document(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
}

const json& field(const json& doc, const char* name) {
    if (!doc.is_object() || !doc.contains(name)) {
        throw ValidationError(std::string("missing field \"") + name + "\"");
    }
    return doc.at(name);
}

int integer_field(const json& doc, const char* name) {
    const json& v = field(doc, name);
    if (!v.is_number_integer()) {
        throw ValidationError(std::string("field \"") + name + "\" must be an integer");
    }
    return v.get<int>();
}

Matrix matrix_field(const json& doc, const char* name, int rows, int cols) {
    const json& v = field(doc, name);
    if (!v.is_array() || static_cast<int>(v.size()) != rows) {
        throw ValidationError(std::string("field \"") + name + "\" must be an array of " + std::to_string(rows) + " rows");
    }
    Matrix out(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            throw ValidationError(std::string(name) + "[" + std::to_string(i) + "] must have " + std::to_string(cols) +
                                  " entries");
        }
        for (int j = 0; j < cols; ++j) {
            const json& e = row[static_cast<std::size_t>(j)];
            if (!e.is_number()) {
                throw ValidationError(std::string(name) + "[" + std::to_string(i) + "][" + std::to_string(j) +
                                      "] is not a number");
            }
            out(i, j) = e.get<double>();
        }
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open input file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

Instance parse_instance_json(const std::string& text) {
    const json doc = parse_document(text);
    const int k = integer_field(doc, "k");
    const int n = integer_field(doc, "n");
    const int m = integer_field(doc, "m");
    if (n < 1 || m < 1) {
        throw ValidationError("n and m must be positive");
    }
    const json& values = field(doc, "values");
    if (!values.is_array() || static_cast<int>(values.size()) != m) {
        throw ValidationError("field \"values\" must be an array of m = " + std::to_string(m) + " numbers");
    }
    std::vector<double> r;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (!values[j].is_number()) {
            throw ValidationError("values[" + std::to_string(j) + "] is not a number");
        }
        r.push_back(values[j].get<double>());
    }
    return Instance(k, std::move(r), matrix_field(doc, "probs", n, m));
}

Instance load_instance(const std::filesystem::path& path) {
    return parse_instance_json(read_file(path));
}

std::string instance_to_json(const Instance& inst) {
    json doc;
    doc["k"] = inst.k();
    doc["n"] = inst.n();
    doc["m"] = inst.m();
    doc["values"] = inst.values();
    doc["probs"] = inst.probs().to_rows();
    return doc.dump();
}

GFile parse_g_json(const std::string& text) {
    const json doc = parse_document(text);
    const int k = integer_field(doc, "k");
    const int n = integer_field(doc, "n");
    const int m = integer_field(doc, "m");
    if (k < 1 || n < 1 || m < 1) {
        throw ValidationError("k, n and m must be positive");
    }
    return GFile{k, TypeDistributions(matrix_field(doc, "G", n, m))};
}

GFile load_g_file(const std::filesystem::path& path) {
    return parse_g_json(read_file(path));
}

}  // namespace prophetlab::model
