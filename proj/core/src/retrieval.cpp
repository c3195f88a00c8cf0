#include "cadence/retrieval.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "cadence/serialization.hpp"

namespace cadence {
namespace {

bool is_cjk(char32_t cp) {
  return (cp >= 0x3040 && cp <= 0x30FF) ||   // kana
         (cp >= 0x3400 && cp <= 0x4DBF) ||   // extension A
         (cp >= 0x4E00 && cp <= 0x9FFF) ||   // unified ideographs
         (cp >= 0xAC00 && cp <= 0xD7AF) ||   // hangul syllables
         (cp >= 0xF900 && cp <= 0xFAFF) ||   // compatibility ideographs
         (cp >= 0x20000 && cp <= 0x2FA1F);   // supplementary ideographs
}

bool is_separator(char32_t cp) {
  if (cp < 0x80) {
    const auto c = static_cast<unsigned char>(cp);
    return !((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'));
  }
  // CJK symbols/punctuation and fullwidth forms separate words.
  return (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF00 && cp <= 0xFFEF) ||
         (cp >= 0x2000 && cp <= 0x206F);
}

// Decodes one UTF-8 sequence starting at text[pos]. Invalid bytes decode to
// themselves with length 1 so tokenisation never fails.
char32_t decode(std::string_view text, std::size_t pos, std::size_t& length) {
  const auto b0 = static_cast<unsigned char>(text[pos]);
  auto cont = [&](std::size_t i) {
    return pos + i < text.size() && (static_cast<unsigned char>(text[pos + i]) & 0xC0) == 0x80;
  };
  auto byte = [&](std::size_t i) {
    return static_cast<char32_t>(static_cast<unsigned char>(text[pos + i]) & 0x3F);
  };
  if (b0 < 0x80) {
    length = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    length = 2;
    return (static_cast<char32_t>(b0 & 0x1F) << 6) | byte(1);
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    length = 3;
    return (static_cast<char32_t>(b0 & 0x0F) << 12) | (byte(1) << 6) | byte(2);
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    length = 4;
    return (static_cast<char32_t>(b0 & 0x07) << 18) | (byte(1) << 12) | (byte(2) << 6) | byte(3);
  }
  length = 1;
  return b0;
}

}  // namespace

CriteriaCorpus CriteriaCorpus::from_texts(
    std::string source_id, std::vector<std::pair<std::string, std::string>> named_texts) {
  CriteriaCorpus corpus;
  corpus.source_id = std::move(source_id);
  for (auto& [name, text] : named_texts) {
    corpus.documents.push_back({corpus.documents.size(), std::move(name), std::move(text)});
  }
  return corpus;
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

std::uint32_t HashingEmbedder::fnv1a(std::string_view bytes) {
  std::uint32_t hash = 2166136261u;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 16777619u;
  }
  return hash;
}

std::vector<std::string> HashingEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t pos = 0; pos < text.size();) {
    std::size_t length = 1;
    const char32_t cp = decode(text, pos, length);
    if (is_cjk(cp)) {
      flush();
      tokens.emplace_back(text.substr(pos, length));
    } else if (is_separator(cp)) {
      flush();
    } else if (cp < 0x80) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(cp))));
    } else {
      current.append(text.substr(pos, length));
    }
    pos += length;
  }
  flush();
  return tokens;
}

std::vector<double> HashingEmbedder::term_counts(std::string_view text) {
  std::vector<double> counts(kBuckets, 0.0);
  for (const auto& token : tokenize(text)) counts[fnv1a(token) % kBuckets] += 1.0;
  return counts;
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::kDomain, "cannot embed empty text");
  ++calls_;
  EmbeddingVector v{term_counts(text)};
  // Text without any token stays the zero vector; similarity rejects it.
  const double n = v.norm();
  if (n > 0.0) {
    for (double& x : v.values) x /= n;
  }
  return v;
}

std::string extract_user_content(const Dialogue& dialogue) {
  std::string out;
  bool any = false;
  for (const auto& turn : dialogue.turns) {
    if (turn.speaker != Speaker::kUser) continue;
    if (any) out.push_back('\n');
    out += turn.text;
    any = true;
  }
  if (!any) {
    throw Error(ErrorCode::kDomain, "dialogue " + dialogue.id + " has no user content");
  }
  return out;
}

EmbeddingVector embed(std::string_view text, EmbeddingProvider& provider) {
  if (text.empty()) throw Error(ErrorCode::kDomain, "cannot embed empty text");
  EmbeddingVector v = provider.embed(text);
  for (double x : v.values) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kProvider, "embedding contains non-finite values");
  }
  if (provider.dimension() != 0 && v.dim() != provider.dimension()) {
    throw Error(ErrorCode::kProvider, "embedding dimension " + std::to_string(v.dim()) +
                                          " differs from provider dimension " +
                                          std::to_string(provider.dimension()));
  }
  return v;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDomain, "dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                        std::to_string(b.dim()));
  }
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    aa += a.values[i] * a.values[i];
    bb += b.values[i] * b.values[i];
  }
  if (aa == 0.0 || bb == 0.0) throw Error(ErrorCode::kDomain, "cosine similarity of a zero vector");
  return dot / (std::sqrt(aa) * std::sqrt(bb));
}

std::size_t select_best(const EmbeddingVector& query, std::span<const EmbeddingVector> documents,
                        double* best_score) {
  if (query.norm() == 0.0) throw Error(ErrorCode::kDomain, "query embedding has zero norm");
  std::optional<std::size_t> best;
  double best_sim = 0.0;
  for (std::size_t n = 0; n < documents.size(); ++n) {
    if (documents[n].norm() == 0.0) continue;
    const double sim = cosine_similarity(query, documents[n]);
    if (!best || sim > best_sim + kTieTolerance) {
      best = n;
      best_sim = sim;
    }
  }
  if (!best) throw Error(ErrorCode::kDomain, "every criteria document embeds to a zero vector");
  if (best_score) *best_score = best_sim;
  return *best;
}

RetrievalResult retrieve_criteria(std::string_view user_content, const CriteriaCorpus& corpus,
                                  EmbeddingProvider& provider) {
  if (corpus.documents.empty()) throw Error(ErrorCode::kDomain, "criteria corpus is empty");
  if (user_content.empty()) throw Error(ErrorCode::kDomain, "user content is empty");
  const EmbeddingVector query = embed(user_content, provider);
  std::vector<EmbeddingVector> docs;
  docs.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) docs.push_back(embed(doc.text, provider));
  RetrievalResult result;
  result.index = select_best(query, docs, &result.score);
  result.document = corpus.documents[result.index];
  return result;
}

CriteriaCorpus load_corpus(const std::filesystem::path& path, const WarningSink& warn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open criteria corpus " + path.string());
  CriteriaCorpus corpus;
  corpus.source_id = path.filename().string();
  std::set<std::string> seen;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (is_blank(line)) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParse, where + ": malformed JSON: " + e.what());
    }
    auto field = [&](const char* name) {
      auto it = record.find(name);
      if (!record.is_object() || it == record.end() || !it->is_string() ||
          is_blank(it->get<std::string>())) {
        throw Error(ErrorCode::kParse, where + ": record needs a non-empty string \"" +
                                           std::string(name) + "\"");
      }
      return it->get<std::string>();
    };
    CriteriaDocument doc{corpus.documents.size(), field("subtype_name"), field("text")};
    if (!seen.insert(doc.subtype_name).second) {
      const std::string message = where + ": duplicate subtype_name \"" + doc.subtype_name + "\"";
      if (warn) {
        warn(message);
      } else {
        std::cerr << "warning: " << message << '\n';
      }
    }
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) {
    throw Error(ErrorCode::kParse, "criteria corpus " + path.string() + " has no documents");
  }
  return corpus;
}

}  // namespace cadence
