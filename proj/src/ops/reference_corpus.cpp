#include <string>
#include <string_view>
#include <vector>

#include "forge/resources.hpp"

namespace forge::reference {

std::string_view english_text() {
  static constexpr std::string_view kText = R"(The river runs past the old mill and into the town. In the morning the
market opens early, and farmers bring fresh bread, cheese, apples and
vegetables from the valley. People walk along the main street, stop at the
bakery, and talk about the weather and the news of the week.

A good library is one of the most useful places in any city. It offers books,
newspapers and quiet rooms where students can read and write. Many libraries
also provide free access to computers and the internet, and they run classes
for children and adults who want to learn new skills.

Water is essential for all known forms of life. Most of the water on the
planet is found in the oceans, while a small part is stored in glaciers,
lakes, rivers and underground. The water cycle describes how water moves
between the sea, the air and the land through evaporation, condensation and
precipitation.

When you start a new project, it is important to make a clear plan. Write
down the goals, list the steps you need to take, and estimate how much time
each step will require. Check your progress regularly and adjust the plan when
something changes. Small improvements over time often lead to large results.

The history of science shows that careful observation and simple experiments
can change the way people understand the world. Scientists collect data,
propose explanations, and test those explanations against new evidence. A
theory that makes accurate predictions is more useful than one that cannot be
tested at all.

Cooking at home can be healthy and affordable. Choose fresh ingredients, use
less salt and sugar, and try to include vegetables in every meal. A simple
soup made with beans, carrots, onions and tomatoes can feed a family for
several days and tastes even better on the second day.

Computers store information as numbers. Programs read these numbers, perform
calculations, and produce results that people can use. Writing software is a
process of breaking a large problem into smaller parts, solving each part, and
then combining the parts into a working system that other people can maintain.

The weather in the mountains can change very quickly. Hikers should carry warm
clothes, water and a map, and they should tell someone where they are going
before they leave. In summer the days are long and the trails are busy, but in
winter many paths are closed because of snow and ice.

Education helps people find better jobs and live longer, healthier lives.
Teachers play an important role in this process, because they guide students,
explain difficult ideas, and encourage curiosity. Parents can support learning
by reading with their children and asking questions about what they learned at
school.
)";
  return kText;
}

std::string_view chinese_text() {
  static constexpr std::string_view kText = R"(今天的天气很好，我们一起去公园散步。公园里有很多人，有的在跑步，有的在下棋，还有的在唱歌。
学习是一件长期的事情，需要每天坚持。读书可以让我们了解世界，也可以帮助我们思考问题。
中国有很长的历史和丰富的文化。许多城市都有古老的建筑和博物馆，吸引了大量的游客前来参观。
科学技术的发展改变了人们的生活方式。现在人们可以用手机购物、学习和工作，生活变得更加方便。
健康的饮食和适当的运动对身体很重要。我们应该多吃蔬菜和水果，少吃油炸食品，并且保持良好的作息习惯。
老师在学校里教学生知识，也教他们如何做人。学生们认真听讲，积极回答问题，课后按时完成作业。
这个城市的交通非常发达，地铁和公交车可以到达每一个地方。早上和晚上是上下班的高峰时间，路上的人特别多。
)";
  return kText;
}

const std::vector<std::string>& english_stopwords() {
  static const std::vector<std::string> kWords = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are", "as",
      "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can",
      "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from", "further",
      "had", "has", "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
      "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my",
      "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our",
      "ours", "ourselves", "out", "over", "own", "same", "she", "should", "so", "some", "such", "than",
      "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
      "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what",
      "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your",
      "yours", "yourself", "yourselves"};
  return kWords;
}

const std::vector<std::string>& flagged_words() {
  static const std::vector<std::string> kWords = {
      "viagra", "casino", "xxx", "porn", "nsfw", "jackpot", "lottery", "clickbait", "giveaway",
      "cialis", "escort", "hentai", "camgirl", "betting", "replica"};
  return kWords;
}

const std::vector<std::string>& instruction_verbs() {
  static const std::vector<std::string> kVerbs = {
      "add", "analyze", "answer", "arrange", "ask", "assess", "build", "calculate", "categorize",
      "change", "check", "choose", "classify", "compare", "compile", "complete", "compose", "compute",
      "construct", "convert", "correct", "count", "create", "define", "delete", "derive", "describe",
      "design", "detect", "determine", "develop", "discuss", "draft", "draw", "edit", "estimate",
      "evaluate", "explain", "extract", "fill", "find", "fix", "format", "generate", "give", "identify",
      "implement", "improve", "infer", "insert", "interpret", "label", "list", "make", "match", "name",
      "optimize", "order", "outline", "paraphrase", "plan", "predict", "prepare", "produce", "propose",
      "provide", "rank", "rate", "read", "recommend", "reorder", "replace", "rephrase", "reply",
      "respond", "restate", "rewrite", "select", "show", "simplify", "solve", "sort", "state",
      "suggest", "summarize", "tell", "test", "transform", "translate", "use", "verify", "write"};
  return kVerbs;
}

}  // namespace forge::reference
