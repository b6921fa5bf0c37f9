#include "fairlora/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "fairlora/errors.hpp"
#include "fairlora/numeric_text.hpp"

namespace fairlora {

namespace {

constexpr const char* kMagic = "fairlora_checkpoint_v1";

void write_matrix(std::ostream& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            out << (j ? " " : "") << format_double(m.at(i, j));
        }
        out << "\n";
    }
}

struct Reader {
    std::istream& in;
    const std::string& path;
    std::size_t line_no = 0;

    std::string next_line() {
        std::string line;
        if (!std::getline(in, line)) {
            throw data_error("checkpoint: '" + path + "' truncated after line " +
                             std::to_string(line_no));
        }
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        return line;
    }

    std::vector<std::string> next_tokens() {
        std::stringstream ss(next_line());
        std::vector<std::string> tokens;
        std::string tok;
        while (ss >> tok) {
            tokens.push_back(tok);
        }
        return tokens;
    }

    void expect(const std::string& literal) {
        const std::string line = next_line();
        if (line != literal) {
            throw data_error("checkpoint: '" + path + "' line " + std::to_string(line_no) +
                             ": expected '" + literal + "', got '" + line + "'");
        }
    }

    Matrix read_matrix(std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            const std::vector<std::string> tokens = next_tokens();
            if (tokens.size() != cols) {
                throw data_error("checkpoint: '" + path + "' line " + std::to_string(line_no) +
                                 ": expected " + std::to_string(cols) + " values, got " +
                                 std::to_string(tokens.size()));
            }
            for (std::size_t j = 0; j < cols; ++j) {
                m.at(i, j) = parse_double(tokens[j],
                                          path + " line " + std::to_string(line_no));
            }
        }
        return m;
    }
};

}  // namespace

void save_checkpoint(const MlpClassifier& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("checkpoint: cannot open '" + path + "' for writing");
    }
    out << kMagic << "\n";
    out << "mode " << (model.mode == TrainMode::kFft ? "fft" : "lora") << "\n";
    out << "hidden " << model.hidden.size() << "\n";
    for (std::size_t l = 0; l < model.hidden.size(); ++l) {
        const DenseLayer& layer = model.hidden[l];
        const Matrix& base = base_weight(layer);
        out << "layer " << l << " " << base.rows << " " << base.cols << " "
            << (layer.adapter ? "adapter" : "plain") << "\n";
        out << "weight\n";
        write_matrix(out, base);
        out << "bias\n";
        write_matrix(out, layer.bias);
        if (layer.adapter) {
            out << "rank " << layer.adapter->rank << " scale "
                << format_double(layer.adapter->scale) << "\n";
            out << "lora_a\n";
            write_matrix(out, layer.adapter->a);
            out << "lora_b\n";
            write_matrix(out, layer.adapter->b);
        }
    }
    const Matrix& head = model.head.weight;
    out << "head " << head.rows << " " << head.cols << "\n";
    out << "weight\n";
    write_matrix(out, head);
    out << "bias\n";
    write_matrix(out, model.head.bias);
}

MlpClassifier load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("checkpoint: cannot open '" + path + "'");
    }
    Reader reader{in, path};
    reader.expect(kMagic);

    MlpClassifier model;
    {
        const auto tokens = reader.next_tokens();
        if (tokens.size() != 2 || tokens[0] != "mode" ||
            (tokens[1] != "fft" && tokens[1] != "lora")) {
            throw data_error("checkpoint: '" + path + "' line " +
                             std::to_string(reader.line_no) + ": bad mode line");
        }
        model.mode = tokens[1] == "fft" ? TrainMode::kFft : TrainMode::kLora;
    }
    const auto hidden_tokens = reader.next_tokens();
    if (hidden_tokens.size() != 2 || hidden_tokens[0] != "hidden") {
        throw data_error("checkpoint: '" + path + "' line " + std::to_string(reader.line_no) +
                         ": bad hidden line");
    }
    const std::size_t hidden_count = static_cast<std::size_t>(
        parse_int(hidden_tokens[1], path));

    for (std::size_t l = 0; l < hidden_count; ++l) {
        const auto tokens = reader.next_tokens();
        if (tokens.size() != 5 || tokens[0] != "layer" ||
            tokens[1] != std::to_string(l) ||
            (tokens[4] != "adapter" && tokens[4] != "plain")) {
            throw data_error("checkpoint: '" + path + "' line " +
                             std::to_string(reader.line_no) + ": bad layer header");
        }
        const std::size_t rows = static_cast<std::size_t>(parse_int(tokens[2], path));
        const std::size_t cols = static_cast<std::size_t>(parse_int(tokens[3], path));
        DenseLayer layer;
        reader.expect("weight");
        Matrix base = reader.read_matrix(rows, cols);
        reader.expect("bias");
        layer.bias = reader.read_matrix(1, cols);
        if (tokens[4] == "adapter") {
            const auto rank_tokens = reader.next_tokens();
            if (rank_tokens.size() != 4 || rank_tokens[0] != "rank" ||
                rank_tokens[2] != "scale") {
                throw data_error("checkpoint: '" + path + "' line " +
                                 std::to_string(reader.line_no) + ": bad rank line");
            }
            LoraAdapter ad;
            ad.rank = static_cast<std::size_t>(parse_int(rank_tokens[1], path));
            ad.scale = parse_double(rank_tokens[3], path);
            ad.base = std::move(base);
            reader.expect("lora_a");
            ad.a = reader.read_matrix(rows, ad.rank);
            reader.expect("lora_b");
            ad.b = reader.read_matrix(ad.rank, cols);
            layer.adapter = std::move(ad);
        } else {
            layer.weight = std::move(base);
        }
        model.hidden.push_back(std::move(layer));
    }
    const auto head_tokens = reader.next_tokens();
    if (head_tokens.size() != 3 || head_tokens[0] != "head") {
        throw data_error("checkpoint: '" + path + "' line " + std::to_string(reader.line_no) +
                         ": bad head header");
    }
    const std::size_t rows = static_cast<std::size_t>(parse_int(head_tokens[1], path));
    const std::size_t cols = static_cast<std::size_t>(parse_int(head_tokens[2], path));
    reader.expect("weight");
    model.head.weight = reader.read_matrix(rows, cols);
    reader.expect("bias");
    model.head.bias = reader.read_matrix(1, cols);
    return model;
}

}  // namespace fairlora
