// texseek: texture retrieval with features hidden inside the images.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "texseek/agent_net.hpp"
#include "texseek/config.hpp"
#include "texseek/error.hpp"
#include "texseek/evaluation.hpp"
#include "texseek/log.hpp"
#include "texseek/retrieval.hpp"
#include "texseek/stego.hpp"

namespace {

using namespace texseek;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_output(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

Attributes parse_attrs(const std::vector<std::string>& items) {
  Attributes attrs;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("attribute '" + item + "' is not key=value");
    attrs.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return attrs;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto token = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      sizes.push_back(std::stoull(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::logic_error&) {
      throw UsageError("bad payload size '" + token + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return sizes;
}

void print_failures(const std::vector<std::string>& failures) {
  for (const auto& f : failures) logger().warn("provider unavailable: {}", f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"texseek: Gabor texture retrieval with DCT-parity embedded attributes"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "Config file (bank parameters, quant_table, parity_dc)");

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Generate a labeled synthetic grating corpus");
  std::string gen_out = "corpus";
  int gen_classes = 4, gen_per_class = 16, gen_size = 256;
  std::uint64_t gen_seed = 42;
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_option("--classes", gen_classes, "Number of classes (1..8)")->capture_default_str();
  gen->add_option("--per-class", gen_per_class, "Images per class")->capture_default_str();
  gen->add_option("--size", gen_size, "Image side in pixels (>= 64)")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();

  // index
  auto* index_cmd = app.add_subcommand("index", "Extract features of a corpus into an index file");
  std::string corpus_dir, index_out, stego_dir;
  bool embed_flag = false;
  index_cmd->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  index_cmd->add_option("--out", index_out, "Index file to write")->required();
  index_cmd->add_flag("--embed", embed_flag, "Also hide each image's features in <name>.stego.pgm");
  index_cmd->add_option("--stego-dir", stego_dir, "Where stego images go (default: the corpus directory)");

  // query
  auto* query_cmd = app.add_subcommand("query", "Rank images by texture similarity to a query image");
  std::string query_index, query_providers, query_image;
  std::size_t top = 10;
  bool from_stego = false;
  auto* qi = query_cmd->add_option("--index", query_index, "Local index file");
  auto* qp = query_cmd->add_option("--providers", query_providers, "Comma-separated [label=]host:port list");
  qi->excludes(qp);
  query_cmd->add_option("--image", query_image, "Query image")->required();
  query_cmd->add_option("--top", top, "Number of results")->capture_default_str();
  query_cmd->add_flag("--from-stego", from_stego, "Use the features embedded in the query image");

  // embed / extract
  auto* embed_cmd = app.add_subcommand("embed", "Hide an image's features and attributes inside it");
  std::string cover_path, embed_out;
  std::vector<std::string> attr_items;
  embed_cmd->add_option("--cover", cover_path, "Cover image")->required();
  embed_cmd->add_option("--attrs", attr_items, "key=value attributes");
  embed_cmd->add_option("--out", embed_out, "Stego image to write (PGM)")->required();

  auto* extract_cmd = app.add_subcommand("extract", "Print the attributes and features hidden in an image");
  std::string stego_path;
  extract_cmd->add_option("--stego", stego_path, "Stego image")->required();

  // serve / dispatch
  auto* serve_cmd = app.add_subcommand("serve", "Serve an image archive to brokers");
  std::string serve_corpus, listen = "127.0.0.1:7878", serve_label;
  serve_cmd->add_option("--corpus", serve_corpus, "Archive directory")->required();
  serve_cmd->add_option("--listen", listen, "HOST:PORT to listen on")->capture_default_str();
  serve_cmd->add_option("--label", serve_label, "Archive label (default: directory name)");

  auto* dispatch_cmd = app.add_subcommand("dispatch", "Collect provider indexes into one merged index");
  std::string dispatch_providers, dispatch_out;
  dispatch_cmd->add_option("--providers", dispatch_providers, "Comma-separated [label=]host:port list")->required();
  dispatch_cmd->add_option("--out", dispatch_out, "Merged index file")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluation: precision/recall, payload sweep, histograms");
  eval_cmd->require_subcommand(1);
  auto* pr_cmd = eval_cmd->add_subcommand("pr", "Leave-one-out precision/recall curve");
  std::string pr_index, pr_manifest, eval_out;
  pr_cmd->add_option("--index", pr_index, "Index file")->required();
  pr_cmd->add_option("--manifest", pr_manifest, "Manifest (id<TAB>class)")->required();
  pr_cmd->add_option("--out", eval_out, "TSV output (default stdout)");
  auto* sweep_cmd = eval_cmd->add_subcommand("sweep", "PSNR against payload size");
  std::string sweep_cover, sweep_sizes = "1000,2000,5000,10000";
  std::uint64_t sweep_seed = 1;
  sweep_cmd->add_option("--cover", sweep_cover, "Cover image")->required();
  sweep_cmd->add_option("--sizes", sweep_sizes, "Comma-separated payload sizes in bits")->capture_default_str();
  sweep_cmd->add_option("--seed", sweep_seed, "Payload seed")->capture_default_str();
  sweep_cmd->add_option("--out", eval_out, "TSV output (default stdout)");
  auto* hist_cmd = eval_cmd->add_subcommand("hist", "256-bin histograms of one or more images");
  std::vector<std::string> hist_images;
  hist_cmd->add_option("--image", hist_images, "Image (repeatable)")->required();
  hist_cmd->add_option("--out", eval_out, "TSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    const PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    const auto stego_opts = stego_options(cfg);

    if (*gen) {
      const auto entries = gen_corpus(gen_out, gen_classes, gen_per_class, gen_size, gen_seed);
      logger().info("wrote {} images and manifest.tsv to {}", entries.size(), gen_out);
    } else if (*index_cmd) {
      BuildOptions options;
      options.embed_attributes = embed_flag;
      if (!stego_dir.empty()) options.stego_dir = stego_dir;
      const auto report = build_index(corpus_dir, cfg, options);
      save_index_file(report.index, index_out);
      logger().info("indexed {} images ({} skipped, {} without a stego copy)", report.index.size(),
                    report.warnings.size(), report.unembedded.size());
    } else if (*query_cmd) {
      if (query_index.empty() && query_providers.empty()) throw UsageError("query needs --index or --providers");
      const auto img = read_pnm_file(query_image);
      const GaborBank bank(cfg.bank);
      if (!query_providers.empty()) {
        const auto q = from_stego ? read_embedded(img, cfg.bank.scales, cfg.bank.orientations, stego_opts).features
                                  : normalize_rotation(bank.features(img));
        const auto report = remote_query(parse_endpoints(query_providers), normalize_rotation(q), top, cfg);
        print_failures(report.failures);
        std::cout << format_results(report.results);
      } else if (!query_index.empty()) {
        const auto idx = load_index_file(query_index);
        if (idx.header().config_hash != config_hash(cfg)) {
          throw Error("index was built with a different configuration (cfg=" + hash_hex(idx.header().config_hash) + ")");
        }
        const RankOptions options{cfg.standardize};
        const auto results = from_stego ? query_from_stego(img, idx, top, stego_opts, options)
                                        : query_from_image(img, idx, top, bank, options);
        std::cout << format_results(results);
      }
    } else if (*embed_cmd) {
      const auto cover = read_pnm_file(cover_path);
      const StegoPayload payload{index_features(cover, GaborBank(cfg.bank)), parse_attrs(attr_items)};
      const auto bits = encode_payload(payload);
      const auto stego = embed(cover, bits, stego_opts);
      write_pgm_file(stego, embed_out);
      logger().info("embedded {} of {} bits; PSNR vs cover {:.2f} dB, vs re-encoded cover {:.2f} dB", bits.size(),
                    capacity(cover), psnr(cover, stego), psnr(reencode(cover, stego_opts.table), stego));
    } else if (*extract_cmd) {
      const auto payload = read_embedded(read_pnm_file(stego_path), cfg.bank.scales, cfg.bank.orientations,
                                         stego_opts);
      for (const auto& [k, v] : payload.attributes) std::cout << "attr\t" << k << "\t" << v << "\n";
      std::cout << "dominant\t" << payload.features.dominant_orientation << "\nfeatures";
      char buf[32];
      for (const double v : payload.features.values) {
        std::snprintf(buf, sizeof buf, "\t%.9g", v);
        std::cout << buf;
      }
      std::cout << "\n";
    } else if (*serve_cmd) {
      const auto ep = parse_endpoint(listen);
      auto label = serve_label.empty() ? std::filesystem::path(serve_corpus).lexically_normal().filename().string()
                                       : serve_label;
      if (label.empty()) label = std::filesystem::absolute(serve_corpus).parent_path().filename().string();
      ProviderServer server(serve_corpus, cfg, label, ep.host, ep.port);
      logger().info("serving archive '{}' on {}:{}", label, ep.host, server.port());
      server.run();
    } else if (*dispatch_cmd) {
      const auto report = dispatch_index(parse_endpoints(dispatch_providers), cfg);
      print_failures(report.failures);
      save_index_file(report.index, dispatch_out);
      for (const auto& c : report.counts) logger().info("archive {}: {} records", c.label, c.count);
      logger().info("merged index: {} records from {} of {} providers", report.index.size(), report.counts.size(),
                    report.counts.size() + report.failures.size());
    } else if (*eval_cmd) {
      if (*pr_cmd) {
        write_output(format_pr(evaluate_index(load_index_file(pr_index), read_manifest(pr_manifest))), eval_out);
      } else if (*sweep_cmd) {
        const auto sizes = parse_sizes(sweep_sizes);
        write_output(format_sweep(psnr_sweep(read_pnm_file(sweep_cover), sizes, stego_opts, sweep_seed)), eval_out);
      } else if (*hist_cmd) {
        std::vector<Histogram> hists;
        for (const auto& path : hist_images) hists.push_back(histogram(read_pnm_file(path)));
        write_output(format_histograms(hists), eval_out);
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "texseek: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "texseek: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
