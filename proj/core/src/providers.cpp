#include "kgval/providers.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "kgval/cache.hpp"
#include "kgval/error.hpp"

namespace kgval {

namespace fs = std::filesystem;

std::string_view to_string(ProviderKind k) noexcept {
    switch (k) {
        case ProviderKind::WorldKnowledge: return "world_knowledge";
        case ProviderKind::Corpus: return "corpus";
        case ProviderKind::Wikidata: return "wikidata";
        case ProviderKind::Web: return "web";
        case ProviderKind::WikidataWeb: return "wikidata_web";
        case ProviderKind::WikipediaWikidata: return "wikipedia_wikidata";
    }
    return "world_knowledge";
}

std::optional<ProviderKind> provider_kind_from_string(std::string_view s) noexcept {
    std::string norm(s);
    std::replace(norm.begin(), norm.end(), '-', '_');
    if (norm == "world" || norm == "world_knowledge") return ProviderKind::WorldKnowledge;
    if (norm == "corpus") return ProviderKind::Corpus;
    if (norm == "wikidata") return ProviderKind::Wikidata;
    if (norm == "web") return ProviderKind::Web;
    if (norm == "wikidata_web") return ProviderKind::WikidataWeb;
    if (norm == "wikipedia_wikidata") return ProviderKind::WikipediaWikidata;
    return std::nullopt;
}

void ProviderConfig::validate() const {
    if (k == 0) throw ConfigError("k must be at least 1");
    if (kind == ProviderKind::Corpus && corpus_paths.empty()) {
        throw ConfigError("the corpus validator needs at least one corpus path");
    }
    if (web_results == 0) throw ConfigError("web_results must be at least 1");
}

bool is_qid(std::string_view s) noexcept {
    return s.size() > 1 && s[0] == 'Q' &&
           std::all_of(s.begin() + 1, s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool is_pid(std::string_view s) noexcept {
    return s.size() > 1 && s[0] == 'P' &&
           std::all_of(s.begin() + 1, s.end(), [](unsigned char c) { return std::isdigit(c); });
}

WikidataEntity filter_trivial_properties(WikidataEntity entity) {
    std::erase_if(entity.claims,
                  [](const WikidataClaim& c) { return c.datatype == kExternalIdDatatype; });
    return entity;
}

Document entity_to_text(const WikidataEntity& entity) {
    std::string body = entity.label.empty() ? entity.qid : entity.label;
    if (!entity.description.empty()) body += " — " + entity.description;
    for (const auto& c : entity.claims) {
        body += '\n';
        body += (c.property_label.empty() ? c.property_id : c.property_label) + ": " + c.value_text;
    }
    return Document{entity.qid, body, OriginKind::Wikidata};
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x110000) {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

std::string decode_entities(std::string_view s) {
    static const std::map<std::string, std::string, std::less<>> kNamed{
        {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"},
        {"nbsp", " "}, {"ndash", "–"}, {"mdash", "—"}, {"hellip", "…"},
        {"rsquo", "’"}, {"lsquo", "‘"}, {"rdquo", "”"}, {"ldquo", "“"}};
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        const auto semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 10) {
            out += '&';
            continue;
        }
        const auto name = s.substr(i + 1, semi - i - 1);
        if (!name.empty() && name[0] == '#') {
            try {
                const bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
                const unsigned long cp =
                    std::stoul(std::string(name.substr(hex ? 2 : 1)), nullptr, hex ? 16 : 10);
                append_utf8(out, cp);
                i = semi;
                continue;
            } catch (const std::exception&) {
            }
        } else if (auto it = kNamed.find(name); it != kNamed.end()) {
            out += it->second;
            i = semi;
            continue;
        }
        out += '&';
    }
    return out;
}

bool is_block_tag(std::string_view name) {
    static const std::set<std::string, std::less<>> kBlock{
        "p",  "div", "br", "li", "ul", "ol", "h1",    "h2",      "h3",  "h4",     "h5",
        "h6", "tr",  "td", "th", "table", "section", "article", "header", "footer", "blockquote",
        "pre", "hr", "nav", "main", "aside", "title"};
    return kBlock.count(name) > 0;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    std::size_t newlines = 0;
    bool space = false;
    for (char c : s) {
        if (c == '\n') {
            ++newlines;
            space = false;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
        } else {
            if (!out.empty()) {
                if (newlines >= 2) {
                    out += "\n\n";
                } else if (newlines == 1) {
                    out += '\n';
                } else if (space) {
                    out += ' ';
                }
            }
            newlines = 0;
            space = false;
            out += c;
        }
    }
    return out;
}

std::string query_param(std::string_view url, std::string_view key) {
    auto q = url.find('?');
    while (q != std::string_view::npos) {
        auto start = q + 1;
        auto eq = url.find('=', start);
        auto amp = url.find('&', start);
        if (eq != std::string_view::npos && (amp == std::string_view::npos || eq < amp) &&
            url.substr(start, eq - start) == key) {
            std::string_view raw = url.substr(eq + 1, amp == std::string_view::npos ? amp : amp - eq - 1);
            std::string out;
            for (std::size_t i = 0; i < raw.size(); ++i) {
                if (raw[i] == '%' && i + 2 < raw.size()) {
                    out += static_cast<char>(std::stoi(std::string(raw.substr(i + 1, 2)), nullptr, 16));
                    i += 2;
                } else {
                    out += raw[i] == '+' ? ' ' : raw[i];
                }
            }
            return out;
        }
        q = amp;
    }
    return {};
}

struct SearchHit {
    std::string title;
    std::string url;
    std::string snippet;
};

std::vector<SearchHit> parse_search_json(const nlohmann::json& j) {
    const nlohmann::json& list = j.is_object() ? j.value("results", nlohmann::json::array()) : j;
    std::vector<SearchHit> out;
    if (!list.is_array()) return out;
    for (const auto& r : list) {
        if (!r.is_object()) continue;
        SearchHit h{r.value("title", ""), r.value("url", r.value("href", "")),
                    r.value("snippet", r.value("body", ""))};
        if (!h.url.empty()) out.push_back(std::move(h));
    }
    return out;
}

// Results page of html.duckduckgo.com: anchors with class "result__a" and snippets
// with class "result__snippet". Links go through a redirect carrying the target in
// the "uddg" parameter.
std::vector<SearchHit> parse_search_html(std::string_view html) {
    std::vector<SearchHit> out;
    std::size_t pos = 0;
    while ((pos = html.find("result__a", pos)) != std::string_view::npos) {
        const auto tag_start = html.rfind('<', pos);
        const auto tag_end = html.find('>', pos);
        const auto close = html.find("</a>", tag_end);
        if (tag_start == std::string_view::npos || tag_end == std::string_view::npos ||
            close == std::string_view::npos) {
            break;
        }
        const auto tag = html.substr(tag_start, tag_end - tag_start);
        std::string href;
        if (auto h = tag.find("href=\""); h != std::string_view::npos) {
            auto e = tag.find('"', h + 6);
            href = decode_entities(tag.substr(h + 6, e - h - 6));
        }
        if (auto target = query_param(href, "uddg"); !target.empty()) href = target;
        if (href.rfind("//", 0) == 0) href = "https:" + href;

        SearchHit hit{html_to_text(html.substr(tag_end + 1, close - tag_end - 1)), href, {}};
        const auto next = html.find("result__a", close);
        const auto snip = html.find("result__snippet", close);
        if (snip != std::string_view::npos && (next == std::string_view::npos || snip < next)) {
            const auto s_open = html.find('>', snip);
            const auto s_close = html.find("</", s_open);
            if (s_open != std::string_view::npos && s_close != std::string_view::npos) {
                hit.snippet = html_to_text(html.substr(s_open + 1, s_close - s_open - 1));
            }
        }
        if (!hit.url.empty()) out.push_back(std::move(hit));
        pos = close;
    }
    return out;
}

std::string render_time(const nlohmann::json& v) {
    std::string t = v.value("time", "");
    if (!t.empty() && (t[0] == '+')) t.erase(0, 1);
    const int precision = v.value("precision", 11);
    const auto tpos = t.find('T');
    std::string date = t.substr(0, tpos);
    if (precision <= 9) return date.substr(0, date.find('-', 1));
    if (precision == 10) return date.substr(0, date.rfind('-'));
    return date;
}

std::string strip_plus(std::string s) {
    if (!s.empty() && s[0] == '+') s.erase(0, 1);
    return s;
}

std::string entity_from_uri(std::string_view uri) {
    auto slash = uri.rfind('/');
    return std::string(slash == std::string_view::npos ? uri : uri.substr(slash + 1));
}

}  // namespace

std::string html_to_text(std::string_view html) {
    std::string text;
    std::size_t i = 0;
    while (i < html.size()) {
        if (html[i] != '<') {
            const auto next = html.find('<', i);
            text += decode_entities(html.substr(i, next == std::string_view::npos ? next : next - i));
            i = next == std::string_view::npos ? html.size() : next;
            continue;
        }
        if (html.substr(i, 4) == "<!--") {
            const auto end = html.find("-->", i + 4);
            i = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        const auto end = html.find('>', i);
        if (end == std::string_view::npos) break;
        std::string_view tag = html.substr(i + 1, end - i - 1);
        const bool closing = !tag.empty() && tag[0] == '/';
        if (closing) tag.remove_prefix(1);
        const auto name_end = tag.find_first_of(" \t\r\n/>");
        const std::string name = lower(tag.substr(0, name_end));
        i = end + 1;
        if (!closing && (name == "script" || name == "style" || name == "noscript" ||
                         name == "template" || name == "svg")) {
            const std::string closer = "</" + name;
            std::size_t p = i;
            for (;;) {
                p = html.find("</", p);
                if (p == std::string_view::npos) break;
                if (lower(html.substr(p, closer.size())) == closer) break;
                p += 2;
            }
            const auto gt = p == std::string_view::npos ? p : html.find('>', p);
            i = gt == std::string_view::npos ? html.size() : gt + 1;
            continue;
        }
        text += is_block_tag(name) ? "\n" : " ";
    }
    return collapse_whitespace(text);
}

ContextService::ContextService(ProviderConfig cfg, std::shared_ptr<HttpTransport> transport,
                               std::shared_ptr<EmbeddingProvider> embedder,
                               ServiceEndpoints endpoints, ChunkingConfig chunking)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      embedder_(std::move(embedder)),
      endpoints_(std::move(endpoints)),
      chunking_(std::move(chunking)) {
    cfg_.validate();
    chunking_.validate();
    if (!embedder_) throw ConfigError("context service needs an embedding provider");
    if (cfg_.cache_dir) {
        transport_ = std::make_shared<CachingTransport>(transport_, *cfg_.cache_dir);
    }
}

nlohmann::json ContextService::get_json(const std::string& url) {
    if (!transport_) throw TransportError(0, "no transport configured for " + url);
    HttpRequest req;
    req.url = url;
    const HttpResponse res = send_with_retry(*transport_, req, retry_);
    auto j = nlohmann::json::parse(res.body, nullptr, false);
    if (j.is_discarded()) throw TransportError(res.status, "response from " + url + " is not JSON");
    return j;
}

ContextBundle ContextService::world_knowledge(const Triple&) {
    return ContextBundle{{}, std::string(kWorldKnowledgeProvider), false};
}

ContextBundle ContextService::fallback_bundle(std::string_view provider) {
    return ContextBundle{{}, std::string(provider), true};
}

ContextBundle ContextService::ranked_bundle(const std::vector<Document>& docs,
                                            const Triple& triple, std::string_view provider) {
    auto index = CorpusIndex::build(docs, chunking_, *embedder_);
    if (index.empty()) return fallback_bundle(provider);
    return ContextBundle{index.top_k(triple_to_query(triple), cfg_.k, *embedder_),
                         std::string(provider), false};
}

std::vector<Document> ContextService::load_corpus() const {
    std::vector<fs::path> files;
    for (const auto& p : cfg_.corpus_paths) {
        if (fs::is_directory(p)) {
            std::vector<fs::path> inner;
            for (const auto& e : fs::recursive_directory_iterator(p)) {
                if (e.is_regular_file()) inner.push_back(e.path());
            }
            std::sort(inner.begin(), inner.end());
            files.insert(files.end(), inner.begin(), inner.end());
        } else if (fs::is_regular_file(p)) {
            files.push_back(p);
        } else {
            throw ConfigError("corpus path not found: " + p.string());
        }
    }

    std::vector<Document> docs;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw ConfigError("cannot read corpus file " + f.string());
        if (f.extension() == ".jsonl") {
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                auto j = nlohmann::json::parse(line, nullptr, false);
                if (j.is_discarded() || !j.is_object()) throw MalformedRecord(line_no, "not a JSON object");
                std::string body = j.value("text", j.value("body", ""));
                if (body.empty()) continue;
                docs.push_back(Document{j.value("id", f.string() + ":" + std::to_string(line_no)),
                                        std::move(body), OriginKind::Corpus});
            }
        } else {
            std::ostringstream ss;
            ss << in.rdbuf();
            if (!ss.str().empty()) docs.push_back(Document{f.string(), ss.str(), OriginKind::Corpus});
        }
    }
    return docs;
}

ContextBundle ContextService::corpus_context(const Triple& triple) {
    std::call_once(corpus_once_, [this] {
        corpus_index_ =
            std::make_unique<CorpusIndex>(CorpusIndex::build(load_corpus(), chunking_, *embedder_));
    });
    if (corpus_index_->empty()) {
        spdlog::warn("corpus is empty; falling back to inherent knowledge");
        return fallback_bundle("corpus");
    }
    return ContextBundle{corpus_index_->top_k(triple_to_query(triple), cfg_.k, *embedder_), "corpus",
                         false};
}

std::optional<std::string> ContextService::wikidata_search(std::string_view label) {
    if (label.find_first_not_of(" \t\r\n") == std::string_view::npos) return std::nullopt;
    const auto j = get_json(with_query(endpoints_.wikidata_api, {{"action", "wbsearchentities"},
                                                                 {"search", std::string(label)},
                                                                 {"language", "en"},
                                                                 {"format", "json"}}));
    const auto hits = j.value("search", nlohmann::json::array());
    if (!hits.is_array() || hits.empty()) return std::nullopt;
    const std::string id = hits[0].value("id", "");
    if (!is_qid(id)) return std::nullopt;
    return id;
}

WikidataEntity ContextService::fetch_entity_unresolved(const std::string& qid) {
    if (!is_qid(qid)) throw InvalidArgument("not a Wikidata item id: " + qid);
    const auto j = get_json(with_query(endpoints_.wikidata_api,
                                       {{"action", "wbgetentities"}, {"ids", qid}, {"format", "json"}}));
    const auto entities = j.value("entities", nlohmann::json::object());
    auto it = entities.find(qid);
    if (it == entities.end() || it->contains("missing")) throw NotFound("Wikidata entity " + qid);
    const auto& e = *it;

    WikidataEntity out;
    out.qid = qid;
    if (auto l = e.find("labels"); l != e.end() && l->contains("en")) {
        out.label = (*l)["en"].value("value", "");
    }
    if (auto d = e.find("descriptions"); d != e.end() && d->contains("en")) {
        out.description = (*d)["en"].value("value", "");
    }
    if (auto s = e.find("sitelinks"); s != e.end() && s->is_object()) {
        for (const auto& [site, link] : s->items()) out.sitelinks[site] = link.value("title", "");
    }
    if (auto claims = e.find("claims"); claims != e.end() && claims->is_object()) {
        for (const auto& [pid, statements] : claims->items()) {
            if (!is_pid(pid)) continue;
            for (const auto& st : statements) {
                const auto& snak = st.value("mainsnak", nlohmann::json::object());
                const std::string snaktype = snak.value("snaktype", "value");
                WikidataClaim c{pid, {}, snak.value("datatype", ""), {}};
                if (snaktype == "somevalue") {
                    c.value_text = "unknown value";
                } else if (snaktype == "novalue") {
                    c.value_text = "no value";
                } else {
                    const auto& dv = snak.value("datavalue", nlohmann::json::object());
                    const std::string type = dv.value("type", "");
                    const auto& v = dv.value("value", nlohmann::json());
                    if (type == "wikibase-entityid") {
                        c.value_text = v.value("id", "");
                    } else if (type == "string") {
                        c.value_text = v.get<std::string>();
                    } else if (type == "time") {
                        c.value_text = render_time(v);
                    } else if (type == "quantity") {
                        c.value_text = strip_plus(v.value("amount", ""));
                        const std::string unit = v.value("unit", "1");
                        if (unit != "1") c.value_text += " " + entity_from_uri(unit);
                    } else if (type == "monolingualtext") {
                        c.value_text = v.value("text", "");
                    } else if (type == "globecoordinate") {
                        std::ostringstream ss;
                        ss << v.value("latitude", 0.0) << ", " << v.value("longitude", 0.0);
                        c.value_text = ss.str();
                    } else {
                        c.value_text = v.dump();
                    }
                }
                if (!c.value_text.empty()) out.claims.push_back(std::move(c));
            }
        }
    }
    return out;
}

WikidataEntity ContextService::fetch_entity(const std::string& qid) {
    WikidataEntity entity = fetch_entity_unresolved(qid);

    std::set<std::string> ids;
    for (const auto& c : entity.claims) {
        ids.insert(c.property_id);
        // Item values and quantity units are ids that need a label.
        std::string_view v = c.value_text;
        if (auto sp = v.rfind(' '); sp != std::string_view::npos) v = v.substr(sp + 1);
        if (is_qid(v)) ids.insert(std::string(v));
    }
    std::map<std::string, std::string> labels;
    const std::vector<std::string> all(ids.begin(), ids.end());
    for (std::size_t i = 0; i < all.size(); i += 50) {
        std::string joined;
        for (std::size_t j = i; j < std::min(all.size(), i + 50); ++j) {
            if (!joined.empty()) joined += '|';
            joined += all[j];
        }
        const auto j = get_json(with_query(endpoints_.wikidata_api, {{"action", "wbgetentities"},
                                                                     {"ids", joined},
                                                                     {"props", "labels"},
                                                                     {"languages", "en"},
                                                                     {"format", "json"}}));
        const auto entities = j.value("entities", nlohmann::json::object());
        for (const auto& [id, e] : entities.items()) {
            if (e.contains("labels") && e["labels"].contains("en")) {
                labels[id] = e["labels"]["en"].value("value", "");
            }
        }
    }

    auto label_of = [&](const std::string& id) {
        auto it = labels.find(id);
        return it == labels.end() || it->second.empty() ? id : it->second;
    };
    for (auto& c : entity.claims) {
        c.property_label = label_of(c.property_id);
        if (c.datatype == "wikibase-item" || c.datatype == "wikibase-property") {
            c.value_text = label_of(c.value_text);
        } else if (c.datatype == "quantity") {
            if (auto sp = c.value_text.rfind(' '); sp != std::string::npos) {
                c.value_text = c.value_text.substr(0, sp + 1) + label_of(c.value_text.substr(sp + 1));
            }
        }
    }
    return entity;
}

ContextBundle ContextService::wikidata_context(const Triple& triple) {
    const auto qid = wikidata_search(triple.subject());
    if (!qid) {
        spdlog::warn("no Wikidata entity found for '{}'; using inherent knowledge", triple.subject());
        return fallback_bundle("wikidata");
    }
    const WikidataEntity entity = filter_trivial_properties(fetch_entity(*qid));
    return ranked_bundle({entity_to_text(entity)}, triple, "wikidata");
}

std::vector<Document> ContextService::web_search(std::string_view query, std::size_t n) {
    if (!transport_) throw TransportError(0, "no transport configured for web search");
    HttpRequest req;
    req.url = with_query(endpoints_.search_endpoint, {{"q", std::string(query)}});
    const HttpResponse res = send_with_retry(*transport_, req, retry_);

    std::vector<SearchHit> hits;
    const auto first = res.body.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && (res.body[first] == '[' || res.body[first] == '{')) {
        auto j = nlohmann::json::parse(res.body, nullptr, false);
        if (j.is_discarded()) throw TransportError(res.status, "search response is not JSON");
        hits = parse_search_json(j);
    } else {
        hits = parse_search_html(res.body);
    }
    if (hits.size() > n) hits.resize(n);

    std::vector<Document> docs;
    for (const auto& hit : hits) {
        std::string body;
        try {
            HttpRequest page;
            page.url = hit.url;
            body = html_to_text(send_with_retry(*transport_, page, retry_).body);
        } catch (const Error& e) {
            spdlog::warn("could not fetch {}: {}; using the search snippet", hit.url, e.what());
        }
        if (body.empty()) {
            body = hit.title;
            if (!hit.snippet.empty()) body += (body.empty() ? "" : "\n") + hit.snippet;
        }
        if (!body.empty()) docs.push_back(Document{hit.url, std::move(body), OriginKind::Web});
    }
    return docs;
}

ContextBundle ContextService::web_context(const Triple& triple) {
    const auto docs = web_search(triple_to_query(triple), cfg_.web_results);
    if (docs.empty()) {
        spdlog::warn("web search returned nothing for '{}'; using inherent knowledge",
                     triple_to_query(triple));
        return fallback_bundle("web");
    }
    return ranked_bundle(docs, triple, "web");
}

ContextBundle ContextService::wikipedia_context(const Triple& triple) {
    const auto qid = wikidata_search(triple.subject());
    if (!qid) return fallback_bundle("wikipedia");
    const WikidataEntity entity = fetch_entity_unresolved(*qid);
    const auto link = entity.sitelinks.find("enwiki");
    if (link == entity.sitelinks.end() || link->second.empty()) {
        spdlog::warn("{} has no English Wikipedia page; using inherent knowledge", *qid);
        return fallback_bundle("wikipedia");
    }
    const auto j = get_json(with_query(endpoints_.wikipedia_api, {{"action", "query"},
                                                                  {"prop", "extracts"},
                                                                  {"explaintext", "1"},
                                                                  {"titles", link->second},
                                                                  {"format", "json"}}));
    std::string extract;
    const auto pages = j.value("query", nlohmann::json::object()).value("pages", nlohmann::json::object());
    for (const auto& [id, page] : pages.items()) {
        extract = page.value("extract", "");
        if (!extract.empty()) break;
    }
    if (extract.empty()) return fallback_bundle("wikipedia");
    std::string title = link->second;
    std::replace(title.begin(), title.end(), ' ', '_');
    return ranked_bundle({Document{endpoints_.wikipedia_page_base + title, extract, OriginKind::Web}},
                         triple, "wikipedia");
}

ContextBundle ContextService::merge(std::vector<ContextBundle> members,
                                    std::string_view provider) const {
    ContextBundle out{{}, std::string(provider), false};
    for (auto& m : members) {
        std::move(m.chunks.begin(), m.chunks.end(), std::back_inserter(out.chunks));
    }
    std::stable_sort(out.chunks.begin(), out.chunks.end(),
                     [](const ContextChunk& a, const ContextChunk& b) {
                         return a.score.value_or(-2.0) > b.score.value_or(-2.0);
                     });
    if (out.chunks.size() > cfg_.k) out.chunks.resize(cfg_.k);
    out.fallback_used = out.chunks.empty();
    return out;
}

ContextBundle ContextService::gather_context(const Triple& triple) {
    switch (cfg_.kind) {
        case ProviderKind::WorldKnowledge: return world_knowledge(triple);
        case ProviderKind::Corpus: return corpus_context(triple);
        case ProviderKind::Wikidata: return wikidata_context(triple);
        case ProviderKind::Web: return web_context(triple);
        case ProviderKind::WikidataWeb: {
            auto wd = std::async(std::launch::async, [&] { return wikidata_context(triple); });
            auto web = std::async(std::launch::async, [&] { return web_context(triple); });
            std::vector<ContextBundle> members;
            members.push_back(wd.get());
            members.push_back(web.get());
            return merge(std::move(members), to_string(cfg_.kind));
        }
        case ProviderKind::WikipediaWikidata: {
            auto wp = std::async(std::launch::async, [&] { return wikipedia_context(triple); });
            auto wd = std::async(std::launch::async, [&] { return wikidata_context(triple); });
            std::vector<ContextBundle> members;
            members.push_back(wp.get());
            members.push_back(wd.get());
            return merge(std::move(members), to_string(cfg_.kind));
        }
    }
    return world_knowledge(triple);
}

}  // namespace kgval
