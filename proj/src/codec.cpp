#include "regae/codec.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "regae/checkpoint.hpp"

namespace regae {

namespace {

void require_patch_side(const ModelParams& params, std::size_t l) {
  if (params.config().l != l) {
    throw ConfigError("patch side mismatch: model uses l = " + std::to_string(params.config().l) + ", data uses l = " +
                      std::to_string(l));
  }
}

}  // namespace

Var encode(Tape& tape, const ModelParams& params, const PatchGrid& grid, EncodeTrace* trace,
           const EncodeOptions& options, std::vector<Var>* diagonal) {
  require_patch_side(params, grid.patch_side());
  const std::size_t n_blocks = grid.blocks_per_side();
  if (n_blocks == 0) throw DataError("cannot encode an empty graph");
  std::map<BlockIndex, Var> x;
  std::size_t invocations = 0;
  encoder_schedule(
      n_blocks,
      [&](BlockIndex idx) {
        const Var patch = tape.constant_row(grid.block(idx));
        std::optional<Var> below;
        std::optional<Var> right;
        if (idx.row > idx.col) {
          const auto a = x.find({idx.row - 1, idx.col});
          const auto b = x.find({idx.row, idx.col + 1});
          if (a == x.end() || b == x.end()) throw std::logic_error("encoder schedule read an unwritten embedding");
          below = a->second;
          right = b->second;
        }
        x[idx] = encoder_cell(tape, params, below, right, patch);
        ++invocations;
        if (trace) trace->visit_order.push_back(idx);
      },
      options.shuffle_seed);
  const Var root = x.at({n_blocks - 1, 0});
  if (diagonal) {
    for (std::size_t k = 0; k < n_blocks; ++k) diagonal->push_back(x.at({k, k}));
  }
  if (trace) {
    trace->n_blocks = n_blocks;
    trace->cell_invocations = invocations;
    for (const auto& [idx, v] : x) trace->x[idx].assign(v.values().begin(), v.values().end());
    trace->root.assign(root.values().begin(), root.values().end());
  }
  return root;
}

EncodeTrace encode(const PatchGrid& grid, const ModelParams& params, const EncodeOptions& options) {
  Tape tape;
  EncodeTrace trace;
  encode(tape, params, grid, &trace, options);
  return trace;
}

DecoderRun run_decoder(Tape& tape, const ModelParams& params, Var x, std::size_t max_layers,
                       const StopPredicate& stop) {
  const std::size_t h = params.config().half();
  if (x.size() != params.config().m) {
    throw ShapeError("decoder: embedding has " + std::to_string(x.size()) + " values, model expects " +
                     std::to_string(params.config().m));
  }
  DecoderRun run;
  // layer[k] is the embedding at (s - k, k).
  std::vector<Var> layer{x};
  std::vector<DecoderOutput> outputs;
  for (std::size_t s = 0; s < max_layers; ++s) {
    outputs.clear();
    const std::size_t first = run.blocks.size();
    for (std::size_t k = 0; k <= s; ++k) {
      outputs.push_back(decoder_cell(tape, params, layer[k]));
      ++run.cell_invocations;
      run.blocks.push_back({BlockIndex{s - k, k}, outputs.back().b_logits, outputs.back().c_logits});
    }
    run.layers = s + 1;
    if (stop && stop(s, std::span<const DecodedBlock>(run.blocks).subspan(first))) {
      run.stopped = true;
      break;
    }
    if (s + 1 == max_layers) break;

    std::vector<Var> next;
    next.reserve(s + 2);
    for (std::size_t k = 0; k <= s + 1; ++k) {
      // Left half from the cell above (s - k, k), or the top-row border cell.
      const Var left = k <= s ? outputs[k].left : border_cell_left(tape, params, slice(layer[s], 0, h));
      // Right half from the cell to the left (s + 1 - k, k - 1), or the left-column border cell.
      const Var right = k >= 1 ? outputs[k - 1].right : border_cell_right(tape, params, slice(layer[0], h, h));
      const std::array<Var, 2> halves{left, right};
      next.push_back(concat(halves));
    }
    layer = std::move(next);
  }
  return run;
}

DecoderRun decode_teacher_forced(Tape& tape, const ModelParams& params, Var x, std::size_t n_blocks) {
  return run_decoder(tape, params, x, n_blocks);
}

void LogitField::set_block(BlockIndex idx, std::span<const Real> values) {
  if (values.size() != side_ * side_) {
    throw ShapeError("logit block holds " + std::to_string(values.size()) + " values, expected " +
                     std::to_string(side_ * side_));
  }
  blocks_[idx].assign(values.begin(), values.end());
}

std::optional<Real> LogitField::at(std::size_t i, std::size_t j) const {
  const auto it = blocks_.find({i / side_, j / side_});
  if (it == blocks_.end()) return std::nullopt;
  return it->second[(i % side_) * side_ + (j % side_)];
}

Graph remap_B_to_A(const LogitField& b_logits, std::size_t n_hat, Real threshold) {
  Graph a(n_hat);
  for (std::size_t i = 0; i + 2 <= n_hat; ++i) {
    for (std::size_t j = 0; i + j + 2 <= n_hat; ++j) {
      const auto logit = b_logits.at(i, j);
      if (!logit) {
        throw DataError("remap: missing B entry (" + std::to_string(i) + ", " + std::to_string(j) + ") for n = " +
                        std::to_string(n_hat));
      }
      // 1-based A^[n - i, j + 1] -> 0-based (n - i - 1, j).
      if (sigmoid_value(*logit) >= threshold) a.add_edge(n_hat - i - 1, j);
    }
  }
  return a;
}

std::size_t infer_exact_size(const LogitField& c_logits, std::size_t n_blocks, std::size_t l, Real threshold) {
  if (n_blocks == 0) return 0;
  const std::size_t lo = (n_blocks - 1) * l + 1;
  const std::size_t hi = n_blocks * l;
  std::size_t best = lo;
  long best_score = -1;
  for (std::size_t n = lo; n <= hi; ++n) {
    long score = 0;
    for (const auto& [idx, values] : c_logits.blocks()) {
      for (std::size_t r = 0; r < l; ++r) {
        for (std::size_t c = 0; c < l; ++c) {
          const std::size_t i = idx.row * l + r;
          const std::size_t j = idx.col * l + c;
          const bool predicted = sigmoid_value(values[r * l + c]) >= threshold;
          const bool target = i + j + 2 <= n;
          if (predicted == target) ++score;
        }
      }
    }
    if (score > best_score) {
      best_score = score;
      best = n;
    }
  }
  return best;
}

DecodeResult decode(std::span<const Real> x, const ModelParams& params, const DecodeOptions& options) {
  if (options.max_blocks == 0) throw ConfigError("max_blocks must be positive");
  const std::size_t l = params.config().l;
  Tape tape;
  const Var root = tape.constant_row(x);
  const auto stop = [&options](std::size_t s, std::span<const DecodedBlock> blocks) {
    if (options.stop_rule == StopRule::verbatim && s == 0) return false;
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& b : blocks) {
      for (Real c : b.c_logits.values()) {
        total += sigmoid_value(c);
        ++count;
      }
    }
    return total / static_cast<double>(count) < 0.5;
  };
  const DecoderRun run = run_decoder(tape, params, root, options.max_blocks, stop);

  DecodeResult result;
  result.b_logits = LogitField(l);
  result.c_logits = LogitField(l);
  for (const auto& b : run.blocks) {
    result.b_logits.set_block(b.index, b.b_logits.values());
    result.c_logits.set_block(b.index, b.c_logits.values());
  }
  result.truncated = !run.stopped;
  result.n_blocks = run.layers;
  result.cell_invocations = run.cell_invocations;
  result.n_hat = infer_exact_size(result.c_logits, result.n_blocks, l, options.threshold);
  result.a_hat = remap_B_to_A(result.b_logits, result.n_hat, options.threshold);
  return result;
}

void write_embedding(std::ostream& out, std::span<const Real> x) {
  write_u32(out, static_cast<std::uint32_t>(x.size()));
  for (Real v : x) write_f32(out, v);
}

std::vector<Real> read_embedding(std::istream& in) {
  std::uint32_t m = 0;
  try {
    m = read_u32(in);
  } catch (const DataError&) {
    throw DataError("embedding: missing header");
  }
  std::vector<Real> x(m);
  try {
    for (auto& v : x) v = read_f32(in);
  } catch (const DataError&) {
    throw DataError("embedding: header declares " + std::to_string(m) + " values but the file is shorter");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("embedding: trailing data after " + std::to_string(m) + " values");
  }
  return x;
}

void save_embedding(const std::filesystem::path& path, std::span<const Real> x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_embedding(out, x);
}

std::vector<Real> load_embedding(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file: " + path.string());
  return read_embedding(in);
}

}  // namespace regae
