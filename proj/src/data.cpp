#include "devae/data.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "devae/errors.hpp"
#include "devae/random.hpp"

namespace devae {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> v) : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != r * c) throw DimensionError("matrix values do not match " + std::to_string(r) + "x" + std::to_string(c));
}

Tensor rows_to_tensor(const Matrix& m, std::span<const std::size_t> rows) {
    std::vector<double> v;
    v.reserve(rows.size() * m.cols);
    for (auto r : rows) {
        const auto src = m.row(r);
        v.insert(v.end(), src.begin(), src.end());
    }
    return Tensor({rows.size(), m.cols}, std::move(v));
}

Tensor to_tensor(const Matrix& m) { return Tensor({m.rows, m.cols}, m.values); }

Matrix to_matrix(const Tensor& t) {
    return Matrix(t.rows(), t.cols(), std::vector<double>(t.values().begin(), t.values().end()));
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val" || s == "validation") return Split::val;
    if (s == "test") return Split::test;
    throw ContractError("unknown split '" + s + "' (expected train, val or test)");
}

std::vector<std::size_t> DatasetBundle::indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i] == s) out.push_back(i);
    }
    return out;
}

void DatasetBundle::validate() const {
    const std::size_t n = X.rows;
    if (Y.rows != n) {
        throw DataError("dataset has " + std::to_string(n) + " samples but " + std::to_string(Y.rows) +
                        " projection rows");
    }
    if (Y.cols != 2) throw DataError("projection targets must be 2-D, got " + std::to_string(Y.cols) + " columns");
    if (labels && labels->size() != n) throw DataError("label count does not match sample count");
    if (split.size() != n) throw DataError("split assignment does not match sample count");
    for (double v : X.values) {
        if (!std::isfinite(v)) throw DataError("samples contain a non-finite value");
    }
    for (double v : Y.values) {
        if (!std::isfinite(v)) throw DataError("projection contains a non-finite value");
    }
}

// --- IDX ---------------------------------------------------------------------

std::size_t IdxData::item_size() const {
    std::size_t s = 1;
    for (std::size_t i = 1; i < dims.size(); ++i) s *= dims[i];
    return s;
}

IdxData parse_idx(std::span<const std::uint8_t> bytes) {
    auto u32 = [&](std::size_t off) {
        return (std::uint32_t{bytes[off]} << 24) | (std::uint32_t{bytes[off + 1]} << 16) |
               (std::uint32_t{bytes[off + 2]} << 8) | std::uint32_t{bytes[off + 3]};
    };
    if (bytes.size() < 4) throw ParseError("idx: file has " + std::to_string(bytes.size()) + " bytes, magic needs 4");
    const std::uint32_t magic = u32(0);
    std::size_t ndims = 0;
    if (magic == kIdxImagesMagic) {
        ndims = 3;
    } else if (magic == kIdxLabelsMagic) {
        ndims = 1;
    } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "idx: bad magic 0x%08X at offset 0", static_cast<unsigned>(magic));
        throw ParseError(buf);
    }
    const std::size_t header = 4 + 4 * ndims;
    if (bytes.size() < header) {
        throw ParseError("idx: header truncated at offset " + std::to_string(bytes.size()) + ", expected " +
                         std::to_string(header) + " bytes");
    }
    IdxData out;
    std::size_t total = 1;
    for (std::size_t i = 0; i < ndims; ++i) {
        const std::size_t dim = u32(4 + 4 * i);
        if (dim != 0 && total > std::numeric_limits<std::size_t>::max() / dim) {
            throw ParseError("idx: dimension product overflows at offset " + std::to_string(4 + 4 * i));
        }
        total *= dim;
        out.dims.push_back(dim);
    }
    const std::size_t actual = bytes.size() - header;
    if (actual < total) {
        throw ParseError("idx: payload truncated at offset " + std::to_string(header) + ": expected " +
                         std::to_string(total) + " bytes, got " + std::to_string(actual));
    }
    if (actual > total) {
        throw ParseError("idx: " + std::to_string(actual - total) + " trailing bytes after offset " +
                         std::to_string(header + total));
    }
    out.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
    return out;
}

IdxData read_idx(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_idx(bytes);
}

std::vector<std::uint8_t> encode_idx(const IdxData& data) {
    std::uint32_t magic = 0;
    if (data.dims.size() == 3) {
        magic = kIdxImagesMagic;
    } else if (data.dims.size() == 1) {
        magic = kIdxLabelsMagic;
    } else {
        throw ContractError("idx encoding supports 1 or 3 dimensions");
    }
    std::size_t total = 1;
    for (auto d : data.dims) total *= d;
    if (total != data.payload.size()) throw ContractError("idx payload does not match dims");
    std::vector<std::uint8_t> out;
    auto put = [&out](std::uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xFFu));
    };
    put(magic);
    for (auto d : data.dims) put(static_cast<std::uint32_t>(d));
    out.insert(out.end(), data.payload.begin(), data.payload.end());
    return out;
}

void write_idx(const std::string& path, const IdxData& data) {
    const auto bytes = encode_idx(data);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> scale_pixels(std::span<const std::uint8_t> raw) {
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<double>(raw[i]) / 255.0;
    return out;
}

Matrix idx_images_to_matrix(const IdxData& images) {
    if (images.dims.size() != 3) throw ParseError("idx: expected an image file (3 dimensions)");
    return Matrix(images.count(), images.item_size(), scale_pixels(images.payload));
}

std::vector<int> idx_labels(const IdxData& labels) {
    if (labels.dims.size() != 1) throw ParseError("idx: expected a label file (1 dimension)");
    return {labels.payload.begin(), labels.payload.end()};
}

// --- CSV -----------------------------------------------------------------------

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_int(const std::string& s, long long& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

struct CsvLine {
    std::size_t number;
    std::vector<std::string> fields;
};

std::vector<CsvLine> csv_lines(const std::string& text) {
    std::vector<CsvLine> out;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back({number, split_fields(line)});
    }
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

CsvVectors parse_csv_vectors(const std::string& text) {
    const auto lines = csv_lines(text);
    if (lines.empty()) throw ParseError("csv: no rows");

    std::size_t first = 0;
    std::optional<std::size_t> label_col;
    std::size_t width = lines[0].fields.size();
    {
        double tmp;
        bool header = false;
        for (const auto& f : lines[0].fields) header = header || !parse_double(f, tmp);
        if (header) {
            first = 1;
            for (std::size_t c = 0; c < width; ++c) {
                if (lines[0].fields[c] == "label") label_col = c;
            }
        }
    }
    const std::size_t d = width - (label_col ? 1 : 0);
    if (d == 0) throw ParseError("csv: no feature columns");

    CsvVectors out;
    std::vector<double> values;
    std::vector<int> labels;
    for (std::size_t li = first; li < lines.size(); ++li) {
        const auto& line = lines[li];
        if (line.fields.size() != width) {
            throw ParseError("csv line " + std::to_string(line.number) + ": expected " + std::to_string(width) +
                             " fields, got " + std::to_string(line.fields.size()));
        }
        for (std::size_t c = 0; c < width; ++c) {
            const auto& cell = line.fields[c];
            if (label_col && c == *label_col) {
                long long v;
                if (!parse_int(cell, v)) {
                    throw ParseError("csv line " + std::to_string(line.number) + ": label '" + cell +
                                     "' is not an integer");
                }
                labels.push_back(static_cast<int>(v));
            } else {
                double v;
                if (!parse_double(cell, v)) {
                    throw ParseError("csv line " + std::to_string(line.number) + ", column " + std::to_string(c + 1) +
                                     ": '" + cell + "' is not numeric");
                }
                values.push_back(v);
            }
        }
    }
    const std::size_t n = lines.size() - first;
    if (n == 0) throw ParseError("csv: header without data rows");
    out.X = Matrix(n, d, std::move(values));
    if (label_col) out.labels = std::move(labels);
    return out;
}

CsvVectors read_csv_vectors(const std::string& path) { return parse_csv_vectors(read_text(path)); }

void write_csv_vectors(const std::string& path, const Matrix& X, const std::optional<std::vector<int>>& labels) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    for (std::size_t c = 0; c < X.cols; ++c) f << (c ? "," : "") << 'f' << c;
    if (labels) f << ",label";
    f << '\n';
    for (std::size_t r = 0; r < X.rows; ++r) {
        for (std::size_t c = 0; c < X.cols; ++c) f << (c ? "," : "") << fmt_double(X.at(r, c));
        if (labels) f << ',' << (*labels)[r];
        f << '\n';
    }
    if (!f) throw IoError("failed writing '" + path + "'");
}

Matrix parse_projection_csv(const std::string& text) {
    const auto lines = csv_lines(text);
    if (lines.empty()) throw ParseError("projection csv: empty file");
    const auto& header = lines[0].fields;
    std::optional<std::size_t> id_col, x_col, y_col;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "id") id_col = c;
        if (header[c] == "x") x_col = c;
        if (header[c] == "y") y_col = c;
    }
    if (!id_col) throw ParseError("projection csv line " + std::to_string(lines[0].number) + ": missing 'id' column");
    if (!x_col || !y_col) {
        throw ParseError("projection csv line " + std::to_string(lines[0].number) +
                         ": coordinates must be 2-D with columns 'x' and 'y'");
    }
    const std::size_t n = lines.size() - 1;
    std::map<long long, std::array<double, 2>> by_id;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto& line = lines[li];
        const auto where = "projection csv line " + std::to_string(line.number);
        if (line.fields.size() != header.size()) {
            throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(line.fields.size()));
        }
        long long id;
        if (!parse_int(line.fields[*id_col], id) || id < 0) {
            throw ParseError(where + ": id '" + line.fields[*id_col] + "' is not a non-negative integer");
        }
        double x, y;
        if (!parse_double(line.fields[*x_col], x) || !parse_double(line.fields[*y_col], y)) {
            throw ParseError(where + ": non-numeric coordinate");
        }
        if (!by_id.emplace(id, std::array<double, 2>{x, y}).second) {
            throw ParseError(where + ": duplicate id " + std::to_string(id));
        }
    }
    Matrix Y(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = by_id.find(static_cast<long long>(i));
        if (it == by_id.end()) {
            throw ParseError("projection csv: missing id " + std::to_string(i) + " (ids must cover 0.." +
                             std::to_string(n - 1) + ")");
        }
        Y.at(i, 0) = it->second[0];
        Y.at(i, 1) = it->second[1];
    }
    return Y;
}

Matrix read_projection_csv(const std::string& path) { return parse_projection_csv(read_text(path)); }

void write_projection_csv(const std::string& path, const Matrix& Y) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << "id,x,y\n";
    for (std::size_t r = 0; r < Y.rows; ++r) {
        f << r << ',' << fmt_double(Y.at(r, 0)) << ',' << fmt_double(Y.at(r, 1)) << '\n';
    }
    if (!f) throw IoError("failed writing '" + path + "'");
}

CsvVectors load_samples(const std::string& path, const std::string& labels_path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    unsigned char head[4] = {0, 0, 0, 0};
    f.read(reinterpret_cast<char*>(head), 4);
    const bool idx = f.gcount() == 4 && head[0] == 0 && head[1] == 0 && head[2] == 0x08 && head[3] == 0x03;
    if (!idx) return read_csv_vectors(path);

    CsvVectors out;
    out.X = idx_images_to_matrix(read_idx(path));
    if (!labels_path.empty()) {
        auto labels = idx_labels(read_idx(labels_path));
        if (labels.size() != out.X.rows) throw DataError("label file does not match image count");
        out.labels = std::move(labels);
    }
    return out;
}

// --- blobs -----------------------------------------------------------------------

Blobs make_blobs(std::size_t n, std::size_t d, std::size_t k, double spread, std::uint64_t seed) {
    if (k < 1 || n < k) throw DataError("make_blobs needs n >= k >= 1");
    if (d < 2) throw DataError("make_blobs needs d >= 2");
    if (!(spread > 0.0)) throw DataError("make_blobs needs spread > 0");

    Rng rng = make_rng(seed, SeedStream::blobs);
    std::uniform_real_distribution<double> center_dist(-5.0, 5.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    Matrix centers(k, d);
    for (auto& v : centers.values) v = center_dist(rng);

    Blobs out;
    out.X = Matrix(n, d);
    out.labels.reserve(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t count = n / k + (c < n % k ? 1 : 0);
        for (std::size_t i = 0; i < count; ++i, ++row) {
            for (std::size_t j = 0; j < d; ++j) out.X.at(row, j) = centers.at(c, j) + spread * noise(rng);
            out.labels.push_back(static_cast<int>(c));
        }
    }
    return out;
}

}  // namespace devae
