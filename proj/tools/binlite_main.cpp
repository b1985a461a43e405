#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "binlite/data.hpp"
#include "binlite/error.hpp"
#include "binlite/infer.hpp"
#include "binlite/model.hpp"
#include "binlite/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("BINLITE_SEED")) return std::strtoull(env, nullptr, 10);
  return 42;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw binlite::ConfigError("empty list '" + s + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_double_list(s)) out.push_back(static_cast<int>(v));
  return out;
}

std::int64_t file_bytes(const std::string& path) {
  std::error_code ec;
  const auto sz = fs::file_size(path, ec);
  return ec ? 0 : static_cast<std::int64_t>(sz);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw binlite::IoError("cannot open '" + path + "' for writing");
  out << text;
}

struct TrainArgs {
  std::string data_dir;
  std::string arch = "scratch";
  std::string classes = "AUTO";
  int epochs = 30;
  double lr = 0.001;
  double momentum = 0.9;
  int patience = 3;
  int batch = 32;
  double width = 1.0;
  std::uint64_t seed = default_seed();
  std::string out = "model.blt";
  std::string report_path;
  std::string monitor = "val_acc";
  std::string split_ratios = "0.7,0.15,0.15";
  std::string lr_sweep;
  std::string backbone;
  std::string manifest_out;
  bool no_augment = false;
  bool json_out = false;
};

int cmd_train(const TrainArgs& a) {
  using namespace binlite;
  if (a.classes != "AUTO")
    throw ConfigError("--classes supports only AUTO (classes come from folder names)");

  DatasetManifest manifest = scan_directory(a.data_dir);
  const auto ratios_v = parse_double_list(a.split_ratios);
  if (ratios_v.size() != 3) throw ConfigError("--split expects three ratios");
  manifest = split_dataset(std::move(manifest),
                           {ratios_v[0], ratios_v[1], ratios_v[2]}, a.seed);
  if (!a.manifest_out.empty()) export_manifest(manifest, a.manifest_out);

  ArchPreset preset;
  preset.name = arch_from_name(a.arch);
  preset.width_multiplier = a.width;
  preset.num_classes = static_cast<int>(manifest.class_names.size());

  TrainConfig cfg;
  cfg.lr = static_cast<float>(a.lr);
  cfg.momentum = static_cast<float>(a.momentum);
  cfg.batch_size = a.batch;
  cfg.max_epochs = a.epochs;
  cfg.patience = a.patience;
  cfg.seed = a.seed;
  cfg.monitor = a.monitor == "val_loss" ? Monitor::val_loss : Monitor::val_accuracy;
  cfg.augment.enabled = !a.no_augment;
  cfg.checkpoint_path = a.out;

  auto build = [&]() {
    ModelGraph g = build_preset(preset, a.seed);
    g.class_names = manifest.class_names;
    if (preset.name == ArchKind::mobilenet_transfer && !a.backbone.empty()) {
      ModelGraph src = load_model(a.backbone);
      copy_body_params(g, src);
    }
    return g;
  };

  const std::string report_path =
      a.report_path.empty() ? a.out + ".report.json" : a.report_path;

  if (!a.lr_sweep.empty()) {
    const auto lrs = parse_double_list(a.lr_sweep);
    json sweep = json::array();
    double best_metric = -1.0;
    std::string table = "lr        best_epoch  val_loss    val_acc\n";
    for (double lr : lrs) {
      ModelGraph g = build();
      TrainConfig c = cfg;
      c.lr = static_cast<float>(lr);
      c.checkpoint_path = a.out + ".lr" + std::to_string(lr) + ".blt";
      TrainReport r = fit(g, manifest, c);
      const auto& best = r.epochs[static_cast<std::size_t>(r.best_epoch - 1)];
      char line[160];
      std::snprintf(line, sizeof line, "%-9g %-11d %-11.4f %-11.4f\n", lr, r.best_epoch,
                    best.val_loss, best.val_acc);
      table += line;
      sweep.push_back({{"lr", lr},
                       {"best_epoch", r.best_epoch},
                       {"val_loss", best.val_loss},
                       {"val_acc", best.val_acc},
                       {"checkpoint", c.checkpoint_path}});
      if (best.val_acc > best_metric) {
        best_metric = best.val_acc;
        fs::copy_file(c.checkpoint_path, a.out, fs::copy_options::overwrite_existing);
      }
    }
    if (a.json_out)
      std::cout << sweep.dump(2) << "\n";
    else
      std::cout << table;
    write_text(report_path, sweep.dump(2));
    return 0;
  }

  ModelGraph g = build();
  if (preset.name == ArchKind::mobilenet_transfer) {
    std::printf("transfer model: frozen body params %lld, trainable head params %lld\n",
                static_cast<long long>(param_count(g) - param_count(g, true)),
                static_cast<long long>(param_count(g, true)));
  }
  TrainReport report = fit(g, manifest, cfg);
  write_text(report_path, report_json(report));
  if (a.json_out) std::cout << report_json(report) << "\n";
  std::printf("best epoch %d, model written to %s\n", report.best_epoch, a.out.c_str());
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& split_str, const std::string& manifest_path,
             const std::string& split_ratios, std::uint64_t seed, bool json_out) {
  using namespace binlite;
  ModelGraph g = load_model(model_path);
  dequantize_once(g);
  DatasetManifest manifest;
  if (!manifest_path.empty()) {
    manifest = import_manifest(manifest_path);
    if (manifest.root.empty()) manifest.root = data_dir;
  } else {
    manifest = scan_directory(data_dir);
    const auto r = parse_double_list(split_ratios);
    if (r.size() != 3) throw ConfigError("--split-ratios expects three ratios");
    manifest = split_dataset(std::move(manifest), {r[0], r[1], r[2]}, seed);
  }
  const Split split = split_from_name(split_str);
  EvalResult res = evaluate(g, manifest, split);
  if (json_out) {
    json j;
    j["split"] = split_str;
    j["loss"] = res.loss;
    j["accuracy"] = res.accuracy;
    j["confusion"] = res.confusion;
    j["class_names"] = g.class_names;
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("split %s: loss %.4f accuracy %.4f\n", split_str.c_str(), res.loss, res.accuracy);
    std::printf("confusion (rows=true, cols=predicted):\n");
    for (int i = 0; i < res.k; ++i) {
      std::printf("%-12s", g.class_names[static_cast<std::size_t>(i)].c_str());
      for (int j = 0; j < res.k; ++j)
        std::printf(" %6lld",
                    static_cast<long long>(res.confusion[static_cast<std::size_t>(i) * res.k + j]));
      std::printf("\n");
    }
  }
  return 0;
}

int cmd_classify(const std::string& model_path, const std::string& image_path, int threads,
                 int topk, bool json_out) {
  using namespace binlite;
  ModelGraph g = load_model(model_path);
  Tensor img = preprocess(load_image(image_path));
  Tensor batch({1, kImageSide, kImageSide, 3});
  std::copy(img.data(), img.data() + img.numel(), batch.data());
  InferResult res = infer(g, batch, threads);

  const int k = static_cast<int>(g.class_names.size());
  std::vector<int> order(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return res.probs[x] > res.probs[y]; });
  const int shown = std::min(topk, k);
  if (json_out) {
    json j;
    j["latency_ms"] = res.latency_ms;
    j["top"] = json::array();
    for (int i = 0; i < shown; ++i)
      j["top"].push_back({{"class", g.class_names[static_cast<std::size_t>(order[i])]},
                          {"probability", res.probs[order[i]]}});
    std::cout << j.dump(2) << "\n";
  } else {
    for (int i = 0; i < shown; ++i)
      std::printf("%-16s %.6f\n", g.class_names[static_cast<std::size_t>(order[i])].c_str(),
                  res.probs[order[i]]);
    std::printf("latency: %.3f ms (%d threads)\n", res.latency_ms, threads);
  }
  return 0;
}

int cmd_quantize(const std::string& in_path, const std::string& mode, const std::string& out_path,
                 const std::string& verify_dir, bool json_out) {
  using namespace binlite;
  ModelGraph g = load_model(in_path);
  const Dtype dtype = mode == "f16" ? Dtype::f16 : mode == "i8" ? Dtype::i8
                                    : throw ConfigError("--mode must be f16 or i8");
  ModelGraph q = quantize(g, dtype);
  save_model(q, out_path);
  const auto in_sz = file_bytes(in_path), out_sz = file_bytes(out_path);
  const double ratio = in_sz > 0 ? static_cast<double>(out_sz) / static_cast<double>(in_sz) : 0.0;

  double agreement = -1.0;
  if (!verify_dir.empty()) {
    DatasetManifest m = scan_directory(verify_dir);
    dequantize_once(q);
    std::int64_t same = 0, total = 0;
    BatchStream stream(m, Split::train, {32, 0, 0, std::nullopt, false});
    Batch b;
    const int k = static_cast<int>(g.class_names.size());
    while (stream.next(b)) {
      Tensor pf = predict(g, b.images);
      Tensor pq = predict(q, b.images);
      const int n = b.images.extent(0);
      for (int i = 0; i < n; ++i) {
        int af = 0, aq = 0;
        for (int j = 1; j < k; ++j) {
          if (pf.at(i, j) > pf.at(i, af)) af = j;
          if (pq.at(i, j) > pq.at(i, aq)) aq = j;
        }
        same += af == aq;
        ++total;
      }
    }
    agreement = static_cast<double>(same) / static_cast<double>(total);
  }

  if (json_out) {
    json j;
    j["mode"] = mode;
    j["input_bytes"] = in_sz;
    j["output_bytes"] = out_sz;
    j["size_ratio"] = ratio;
    if (agreement >= 0) j["top1_agreement"] = agreement;
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("quantized %s -> %s (%s): %lld -> %lld bytes, ratio %.3f\n", in_path.c_str(),
                out_path.c_str(), mode.c_str(), static_cast<long long>(in_sz),
                static_cast<long long>(out_sz), ratio);
    if (agreement >= 0) std::printf("top-1 agreement vs f32: %.4f\n", agreement);
  }
  return 0;
}

int cmd_bench(const std::string& model_path, const std::string& threads_str, int iters,
              int warmup, bool json_out) {
  using namespace binlite;
  ModelGraph g = load_model(model_path);
  BenchReport r = bench(g, parse_int_list(threads_str), iters, warmup, file_bytes(model_path));
  std::cout << (json_out ? bench_json(r) + "\n" : bench_table(r));
  return 0;
}

int cmd_inspect(const std::string& model_path, bool json_out) {
  using namespace binlite;
  ModelGraph g = load_model(model_path);
  const auto shapes = shape_walk(g, 1);
  json j;
  j["arch"] = g.meta.arch;
  j["seed"] = g.meta.seed;
  j["width_multiplier"] = g.meta.width_multiplier;
  j["input_shape"] = g.input_shape;
  j["class_names"] = g.class_names;
  j["quantized"] = g.meta.quantized;
  j["param_count"] = param_count(g);
  j["trainable_param_count"] = param_count(g, true);
  j["body_param_count"] = param_count_body(g);
  j["file_bytes"] = file_bytes(model_path);
  j["layers"] = json::array();
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& u = g.layers[i];
    j["layers"].push_back({{"index", i},
                           {"kind", layer_kind_name(u.spec.kind)},
                           {"params", layer_param_count(u.spec)},
                           {"trainable", u.spec.trainable},
                           {"output_shape", shapes[i]}});
  }
  if (json_out) {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("arch: %s  (width %.3f, seed %llu)\n", g.meta.arch.c_str(),
              g.meta.width_multiplier, static_cast<unsigned long long>(g.meta.seed));
  std::printf("classes: %zu  quantized: %s  file: %lld bytes\n", g.class_names.size(),
              g.meta.quantized.c_str(), static_cast<long long>(file_bytes(model_path)));
  std::printf("parameters: %lld total, %lld trainable, %lld in body\n",
              static_cast<long long>(param_count(g)), static_cast<long long>(param_count(g, true)),
              static_cast<long long>(param_count_body(g)));
  std::printf("%-6s %-16s %-12s %-10s %s\n", "idx", "kind", "params", "trainable", "output");
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& u = g.layers[i];
    std::string shape;
    for (int e : shapes[i]) shape += (shape.empty() ? "" : "x") + std::to_string(e);
    std::printf("%-6zu %-16s %-12lld %-10s %s\n", i, layer_kind_name(u.spec.kind),
                static_cast<long long>(layer_param_count(u.spec)),
                u.spec.trainable ? "yes" : "no", shape.c_str());
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"binlite: small CNN training and quantized-inference engine"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a model on an image directory");
  train->add_option("--data", ta.data_dir, "dataset root (one folder per class)")->required();
  train->add_option("--arch", ta.arch, "scratch|vgg16|mobilenet|transfer");
  train->add_option("--classes", ta.classes, "AUTO (folder-name discovery)");
  train->add_option("--epochs", ta.epochs, "max epochs");
  train->add_option("--lr", ta.lr, "learning rate");
  train->add_option("--momentum", ta.momentum, "SGD momentum");
  train->add_option("--patience", ta.patience, "early stopping patience");
  train->add_option("--batch", ta.batch, "batch size");
  train->add_option("--width", ta.width, "width multiplier in (0,1]");
  train->add_option("--seed", ta.seed, "rng seed (default env BINLITE_SEED or 42)");
  train->add_option("--out", ta.out, "output model file");
  train->add_option("--report", ta.report_path, "TrainReport JSON path");
  train->add_option("--monitor", ta.monitor, "val_acc|val_loss");
  train->add_option("--split", ta.split_ratios, "train,val,test ratios");
  train->add_option("--lr-sweep", ta.lr_sweep, "comma list of learning rates to sweep");
  train->add_option("--backbone", ta.backbone, "pretrained mobilenet_v2 model for --arch transfer");
  train->add_option("--export-manifest", ta.manifest_out, "write the split manifest (JSON lines)");
  train->add_flag("--no-augment", ta.no_augment, "disable train-split augmentation");
  train->add_flag("--json", ta.json_out, "machine-readable output");

  std::string model_path, data_dir, split_str = "val", manifest_path;
  std::string eval_ratios = "0.7,0.15,0.15";
  std::uint64_t eval_seed = default_seed();
  bool eval_json = false;
  auto* eval = app.add_subcommand("eval", "evaluate a model on a split");
  eval->add_option("--model", model_path, "model file")->required();
  eval->add_option("--data", data_dir, "dataset root");
  eval->add_option("--split", split_str, "train|val|test");
  eval->add_option("--manifest", manifest_path, "reuse an exported manifest");
  eval->add_option("--split-ratios", eval_ratios, "ratios when re-splitting");
  eval->add_option("--seed", eval_seed, "split seed (must match training)");
  eval->add_flag("--json", eval_json, "machine-readable output");

  std::string cls_model, cls_image;
  int cls_threads = 1, cls_topk = 5;
  bool cls_json = false;
  auto* classify = app.add_subcommand("classify", "classify one image");
  classify->add_option("--model", cls_model, "model file")->required();
  classify->add_option("--image", cls_image, "PPM or PNG image")->required();
  classify->add_option("--threads", cls_threads, "inference threads");
  classify->add_option("--topk", cls_topk, "ranked classes to print");
  classify->add_flag("--json", cls_json, "machine-readable output");

  std::string q_in, q_mode = "f16", q_out, q_verify;
  bool q_json = false;
  auto* quant = app.add_subcommand("quantize", "post-training quantization");
  quant->add_option("--in", q_in, "f32 model file")->required();
  quant->add_option("--mode", q_mode, "f16|i8");
  quant->add_option("--out", q_out, "quantized model file")->required();
  quant->add_option("--verify", q_verify, "image directory for top-1 agreement");
  quant->add_flag("--json", q_json, "machine-readable output");

  std::string b_model, b_threads = "1,2,4";
  int b_iters = 50, b_warmup = 5;
  bool b_json = false;
  auto* benchc = app.add_subcommand("bench", "latency sweep over thread counts");
  benchc->add_option("--model", b_model, "model file")->required();
  benchc->add_option("--threads", b_threads, "comma list, strictly increasing");
  benchc->add_option("--iters", b_iters, "timed iterations per count (>= 10)");
  benchc->add_option("--warmup", b_warmup, "warmup runs per count (>= 1)");
  benchc->add_flag("--json", b_json, "machine-readable output");

  std::string i_model;
  bool i_json = false;
  auto* inspect = app.add_subcommand("inspect", "print model structure and counts");
  inspect->add_option("--model", i_model, "model file")->required();
  inspect->add_flag("--json", i_json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kExitUsage : 0;
  }

  try {
    if (*train) return cmd_train(ta);
    if (*eval)
      return cmd_eval(model_path, data_dir, split_str, manifest_path, eval_ratios, eval_seed,
                      eval_json);
    if (*classify) return cmd_classify(cls_model, cls_image, cls_threads, cls_topk, cls_json);
    if (*quant) return cmd_quantize(q_in, q_mode, q_out, q_verify, q_json);
    if (*benchc) return cmd_bench(b_model, b_threads, b_iters, b_warmup, b_json);
    if (*inspect) return cmd_inspect(i_model, i_json);
  } catch (const binlite::TrainAborted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const binlite::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const binlite::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const binlite::LabelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) { // ingest/decode/load/io/shape
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
