#include "pdr/records.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

#include "pdr/error.hpp"

namespace pdr {
namespace {

using nlohmann::json;

void check_sequence(const std::vector<double>& values, std::string_view field, bool nonpositive,
                    bool nonnegative) {
    for (std::size_t t = 0; t < values.size(); ++t) {
        const double v = values[t];
        if (!std::isfinite(v)) {
            throw ValidationError(std::string(field) + "[" + std::to_string(t) + "] is not finite");
        }
        if (nonpositive && v > 0.0) {
            throw ValidationError(std::string(field) + " must be <= 0 (found " + std::to_string(v) + " at index " +
                                  std::to_string(t) + ")");
        }
        if (nonnegative && v < 0.0) {
            throw ValidationError(std::string(field) + " must be >= 0 (found " + std::to_string(v) + " at index " +
                                  std::to_string(t) + ")");
        }
    }
}

void check_length(const std::optional<std::vector<double>>& values, std::string_view field, std::size_t length) {
    if (values && values->size() != length) {
        throw ValidationError("length mismatch: " + std::string(field) + " has " + std::to_string(values->size()) +
                              " entries but logp has " + std::to_string(length));
    }
}

std::vector<double> read_sequence(const json& obj, const char* field) {
    const json& value = obj.at(field);
    if (!value.is_array()) {
        throw ValidationError(std::string(field) + " must be an array of numbers");
    }
    std::vector<double> out;
    out.reserve(value.size());
    for (const json& v : value) {
        if (!v.is_number()) {
            throw ValidationError(std::string(field) + " must be an array of numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

std::optional<std::vector<double>> read_optional_sequence(const json& obj, const char* field) {
    const auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    return read_sequence(obj, field);
}

std::optional<std::int64_t> read_optional_count(const json& obj, const char* field) {
    const auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_number_integer()) {
        throw ValidationError(std::string(field) + " must be an integer");
    }
    return it->get<std::int64_t>();
}

std::string read_id(const json& obj) {
    const auto it = obj.find("id");
    if (it == obj.end() || !it->is_string()) {
        throw ValidationError("id must be a string");
    }
    return it->get<std::string>();
}

bool read_label(const json& obj) {
    const auto it = obj.find("label");
    if (it == obj.end() || !it->is_boolean()) {
        throw ValidationError("label must be true or false");
    }
    return it->get<bool>();
}

json parse_object(std::string_view line) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::exception& e) {
        // out-of-range literals such as 1e999 land here as well
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) {
        throw ValidationError("expected a JSON object");
    }
    return obj;
}

bool is_blank(std::string_view line) {
    return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        ++line_no;
        const std::string_view line = text.substr(pos, end - pos);
        if (!is_blank(line)) {
            fn(line, line_no);
        }
        pos = end + 1;
    }
}

std::string slurp(std::istream& in) {
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

void validate(const SequenceRecord& r) {
    if (r.id.empty()) {
        throw ValidationError("id must be non-empty");
    }
    if (r.logp.empty()) {
        throw ValidationError("logp must have at least one entry");
    }
    const std::size_t length = r.logp.size();
    check_length(r.logp_ref, "logp_ref", length);
    check_length(r.mu, "mu", length);
    check_length(r.sigma, "sigma", length);
    check_length(r.entropy, "entropy", length);

    check_sequence(r.logp, "logp", true, false);
    if (r.logp_ref) {
        check_sequence(*r.logp_ref, "logp_ref", true, false);
    }
    if (r.mu) {
        check_sequence(*r.mu, "mu", false, false);
    }
    if (r.sigma) {
        check_sequence(*r.sigma, "sigma", false, true);
    }
    if (r.entropy) {
        check_sequence(*r.entropy, "entropy", false, true);
    }
    if (r.mean_logp_lower) {
        if (!std::isfinite(*r.mean_logp_lower)) {
            throw ValidationError("mean_logp_lower is not finite");
        }
        if (*r.mean_logp_lower > 0.0) {
            throw ValidationError("mean_logp_lower must be <= 0");
        }
    }
    if (r.byte_len && *r.byte_len < 1) {
        throw ValidationError("byte_len must be >= 1");
    }
    if (r.zlib_len && *r.zlib_len < 1) {
        throw ValidationError("zlib_len must be >= 1");
    }
}

void validate(const ScoredSample& s) {
    if (s.id.empty()) {
        throw ValidationError("id must be non-empty");
    }
    if (!std::isfinite(s.score)) {
        throw ValidationError("score for '" + s.id + "' is not finite");
    }
}

SequenceRecord truncated(const SequenceRecord& record, std::size_t prefix) {
    SequenceRecord out = record;
    const auto cut = [prefix](std::vector<double>& v) {
        if (v.size() > prefix) {
            v.resize(prefix);
        }
    };
    cut(out.logp);
    for (auto* seq : {&out.logp_ref, &out.mu, &out.sigma, &out.entropy}) {
        if (*seq) {
            cut(**seq);
        }
    }
    return out;
}

SequenceRecord parse_record_line(std::string_view line, std::size_t line_no) {
    try {
        const json obj = parse_object(line);
        SequenceRecord r;
        r.id = read_id(obj);
        r.label = read_label(obj);
        if (const auto it = obj.find("source"); it != obj.end() && !it->is_null()) {
            if (!it->is_string()) {
                throw ValidationError("source must be a string");
            }
            r.source = it->get<std::string>();
        }
        if (!obj.contains("logp")) {
            throw ValidationError("logp is required");
        }
        r.logp = read_sequence(obj, "logp");
        r.logp_ref = read_optional_sequence(obj, "logp_ref");
        r.mu = read_optional_sequence(obj, "mu");
        r.sigma = read_optional_sequence(obj, "sigma");
        r.entropy = read_optional_sequence(obj, "entropy");
        if (const auto it = obj.find("mean_logp_lower"); it != obj.end() && !it->is_null()) {
            if (!it->is_number()) {
                throw ValidationError("mean_logp_lower must be a number");
            }
            r.mean_logp_lower = it->get<double>();
        }
        r.byte_len = read_optional_count(obj, "byte_len");
        r.zlib_len = read_optional_count(obj, "zlib_len");
        validate(r);
        return r;
    } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
}

std::vector<SequenceRecord> parse_records(std::string_view text) {
    std::vector<SequenceRecord> out;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        out.push_back(parse_record_line(line, line_no));
    });
    return out;
}

std::vector<SequenceRecord> parse_records(std::istream& in) {
    return parse_records(maybe_gunzip(slurp(in)));
}

std::string record_to_line(const SequenceRecord& r) {
    json obj = json::object();
    obj["id"] = r.id;
    obj["label"] = r.label;
    if (r.source) {
        obj["source"] = *r.source;
    }
    obj["logp"] = r.logp;
    if (r.logp_ref) {
        obj["logp_ref"] = *r.logp_ref;
    }
    if (r.mu) {
        obj["mu"] = *r.mu;
    }
    if (r.sigma) {
        obj["sigma"] = *r.sigma;
    }
    if (r.entropy) {
        obj["entropy"] = *r.entropy;
    }
    if (r.mean_logp_lower) {
        obj["mean_logp_lower"] = *r.mean_logp_lower;
    }
    if (r.byte_len) {
        obj["byte_len"] = *r.byte_len;
    }
    if (r.zlib_len) {
        obj["zlib_len"] = *r.zlib_len;
    }
    return obj.dump();
}

void write_records(std::ostream& out, const std::vector<SequenceRecord>& records) {
    for (const auto& r : records) {
        validate(r);
        out << record_to_line(r) << '\n';
    }
}

std::vector<ScoredSample> parse_scores(std::string_view text) {
    std::vector<ScoredSample> out;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        try {
            const json obj = parse_object(line);
            ScoredSample s;
            s.id = read_id(obj);
            s.label = read_label(obj);
            const auto it = obj.find("score");
            if (it == obj.end() || !it->is_number()) {
                throw ValidationError("score must be a number");
            }
            s.score = it->get<double>();
            validate(s);
            out.push_back(std::move(s));
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
    });
    return out;
}

std::vector<ScoredSample> parse_scores(std::istream& in) {
    return parse_scores(maybe_gunzip(slurp(in)));
}

void write_scores(std::ostream& out, const std::vector<ScoredSample>& samples) {
    for (const auto& s : samples) {
        validate(s);
        json obj = json::object();
        obj["id"] = s.id;
        obj["label"] = s.label;
        obj["score"] = s.score;
        out << obj.dump() << '\n';
    }
}

std::string maybe_gunzip(std::string data) {
    if (data.size() < 2 || static_cast<unsigned char>(data[0]) != 0x1F ||
        static_cast<unsigned char>(data[1]) != 0x8B) {
        return data;
    }
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
        throw std::runtime_error("inflateInit2 failed");
    }
    zs.next_in = reinterpret_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());

    std::string out;
    char buffer[1 << 16];
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = reinterpret_cast<Bytef*>(buffer);
        zs.avail_out = sizeof(buffer);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc == Z_STREAM_END && zs.avail_in > 0) {
            // concatenated gzip members
            out.append(buffer, sizeof(buffer) - zs.avail_out);
            inflateReset(&zs);
            rc = Z_OK;
            continue;
        }
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw ValidationError("corrupt gzip stream");
        }
        out.append(buffer, sizeof(buffer) - zs.avail_out);
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw ValidationError("truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

std::string read_input(const std::string& path) {
    if (path == "-") {
        return maybe_gunzip(slurp(std::cin));
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open '" + path + "'");
    }
    return maybe_gunzip(slurp(in));
}

} // namespace pdr
