#!/usr/bin/env python3
"""Regenerates the fixture data assets under data/.

The outputs are checked in; rerun only when the tables below change:

    python3 tools/make_fixtures.py data/

Everything is seeded, so the output is byte-stable across runs.
"""

import csv
import json
import hashlib
import io
import math
import random
import sys
from pathlib import Path

# Pingshui readings for every character the fixtures use. One row per rhyme
# group: "<group> <tone> <chars>". Characters with several readings appear in
# several rows.
READINGS = """
一东 平 东风中空红同通宫鸿蓬翁笼功虹桐丛穷终融葱枫蒙
二冬 平 冬钟龙松峰踪浓重逢容封慵恭从
三江 平 江窗双
四支 平 时枝迟诗知丝期辞悲垂池眉疑离儿吹随思移旗奇姿谁宜词为持歧之而其涯
五微 平 飞归衣微晖稀依扉矶薇违
六鱼 平 鱼书居渔初余虚疏墟如除庐车
七虞 平 无湖孤途图壶枯芜扶夫隅珠都苏须炉徒乎于
八齐 平 溪西低啼齐堤迷泥栖萋题鸡兮
九佳 平 佳街怀斋钗涯柴
十灰 平 来开回台苔杯哀催埃梅才栽徊雷哉
十一真 平 人春尘身新真津邻神频巾辰亲滨鳞银因珍
十二文 平 云闻君分纷群文曛
十三元 平 村门昏魂痕园源言原繁翻喧存孙樽轩鸳
十四寒 平 寒难栏看残干安竿滩端峦桓盘欢团丹单宽兰阑
十五删 平 山间关还闲颜湾斑攀环
一先 平 天年前烟边眠川船泉田然弦怜仙千圆连莲悬篇沿焉蝉
二萧 平 桥遥萧朝潮消宵条摇飘迢樵箫凋瑶
三肴 平 郊巢梢抛茅
四豪 平 高涛毫袍劳蒿桃陶
五歌 平 歌多河波何过罗荷蓑峨他
六麻 平 花家斜霞沙鸦茶华嗟芽麻槎车涯
七阳 平 阳长香霜光乡茫凉塘黄堂扬肠墙苍王央杨忘商狂床芳伤航望相鸯觞将方荒妨行
八庚 平 生声明情城平清轻名晴惊鸣横行荣更英兵莺营倾程盟京琼
九青 平 青零星亭庭经灵汀屏萍冥溟形宁铭听丁
十蒸 平 灯僧层凭登藤冰陵
十一尤 平 楼流舟秋愁州头游留收洲休鸥忧浮悠柔钩犹
十二侵 平 心林深金吟音阴琴寻侵襟今沉临禽参
十三覃 平 南潭岚参
十四盐 平 帘檐添
十五咸 平 帆衫岩
一董 仄 动孔
二肿 仄 重拥
四纸 仄 水起始此里以矣喜已侣纸
五尾 仄 几岂尾
六语 仄 语女许举与处
七麌 仄 父雨古缕户
十贿 仄 海采彩在
十一轸 仄 尽引
十三阮 仄 远晚
十四旱 仄 满暖
十五潸 仄 眼
十六铣 仄 浅转
十七筱 仄 晓小鸟
十九皓 仄 草老好浩早
二十哿 仄 可我火锁
二十一马 仄 野马下者也且
二十二养 仄 长荡响想上
二十三梗 仄 影冷岭井静景
二十五有 仄 柳酒手有后首
二十六寝 仄 枕锦
二十八琰 仄 点
一送 仄 梦中送冻
二宋 仄 重共
四寘 仄 醉寺自意翠泪事地寐字思为
六御 仄 去处
七遇 仄 树路暮故鹭数
八霁 仄 际岁细
九泰 仄 外会奈
十卦 仄 画
十一队 仄 对在
十二震 仄 信鬓
十四愿 仄 万恨
十五翰 仄 岸看难半
十七霰 仄 见遍面院
二十一箇 仄 破过
二十二祃 仄 夜
二十三漾 仄 望相忘
二十四敬 仄 镜更
二十五径 仄 径听凭
二十六宥 仄 旧又
二十八勘 仄 暂
一屋 仄 独竹木宿谷屋读
二沃 仄 绿玉曲欲
四质 仄 一日
五物 仄 不
五未 仄 未
十八啸 仄 钓
六月 仄 月没发歇
七曷 仄 抹
九屑 仄 雪别绝节
十药 仄 落昨鹤阁泊各约莫作
十一陌 仄 白石客碧隔夕亦
十二锡 仄 笛寂壁
十三职 仄 色北
十四缉 仄 立入湿
十六叶 仄 叶
"""

STOPWORDS = "之 乎 者 也 而 以 于 其 兮 矣 焉 哉 与".split()

# Two-character words by topic. Topics drive the synthetic embeddings so the
# centroid of a poem's characters lands near its dominant topic.
TOPICS = {
    "landscape": "青山 远山 春水 流水 江水 白云 孤云 烟波 溪桥 小桥 山寺 松风 竹林 "
                 "石径 寒江 江湖 沙洲 烟雨 山色 水边 峰峦 溪边 云间 岩前 碧峰",
    "parting": "故人 归舟 长亭 离愁 相思 别酒 天涯 孤帆 归心 他乡 离情 故园 "
               "别后 归来 相逢 旧游 江楼 客路 乡心 远书",
    "autumn": "秋风 落叶 霜天 黄花 西风 秋声 寒霜 残阳 暮色 秋水 寒林 霜林 "
              "落木 秋山 夕阳 荒城 孤城",
    "spring": "杨柳 桃花 春风 芳草 莺啼 花开 东风 春色 春光 飞花 落花 新绿 "
              "垂杨 梅花 春城 莲花",
    "night": "明月 夜深 孤灯 寒窗 钟声 星河 月明 清光 夜阑 灯前 枕上 残灯 "
             "月色 霜钟 深宵",
    "recluse": "渔父 樵夫 白鹭 沙鸥 闲云 野鹤 茅屋 渔舟 钓竿 烟霞 琴书 松间 "
               "山僧 竹窗 苔径 柴门",
    "amorous": "鸳鸯 相思 罗衣 红颜 翠眉 金钗 琼瑶 珍重 团圆 佳人 锦书 "
               "兰舟 春心 红楼 玉人 云鬓",
}

FILLERS = "一 独 自 不 何 无 几 万 千 谁 犹 空 长 还 半 多 又 共 未 欲 时 相 且".split()

# Poems quoted by the literature this toolkit reproduces; every character is
# covered by READINGS.
NAMED_POEMS = [
    ("失题", "当代", "杜随", "后会何须约，前尘自可忘。一时同梦寐，万古各参商。"),
    ("白鹭", "当代", "佚名", "杨柳花飞芜草青，野塘烟草自凋零。一双白鹭来烟际，点破遥山数抹青。"),
    ("无题", "当代", "佚名",
     "相见时难别亦难，临歧无奈暂盘桓。舟沿碧草同千里，人隔青天共一峦。"
     "梦去不妨风浩荡，酒来犹喜月团圆。从今珍重琼瑶字，莫作鸳鸯万缕看。"),
    ("晓风", "当代", "佚名", "独起凭栏对晓风，满溪春水小桥东。始知昨夜红楼梦，身在桃花万树中。"),
    ("次韵晓风", "当代", "佚名", "日没荒墟生晓风，满溪流水碧山东。不知渔父相扶醉，独立苍茫烟雨中。"),
]

# Basic line patterns, P = level, Z = oblique.
PATTERNS5 = {"A": "ZZPPZ", "B": "PPZZP", "C": "PPPZZ", "D": "ZZZPP"}
TEMPLATES = ["ABCD", "DBCD", "CDAB", "BDAB"]


def pattern(letter, length):
    base = PATTERNS5[letter]
    if length == 5:
        return base
    flip = "Z" if base[0] == "P" else "P"
    return flip * 2 + base


def parse_readings():
    book = {}
    rows = []
    for line in READINGS.strip().splitlines():
        group, tone, chars = line.split()
        for ch in chars:
            key = (ch, group, tone)
            if key not in rows:
                rows.append(key)
            book.setdefault(ch, set()).add(("P" if tone == "平" else "Z", group))
    return book, rows


def tones(book, ch):
    return {t for t, _ in book[ch]}


def ping_groups(book, ch):
    return {g for t, g in book[ch] if t == "P"}


def fits(book, word, pat, start, relaxed, length):
    for i, ch in enumerate(word):
        pos = start + i
        free = relaxed and pos % 2 == 0 and pos < length - 1
        if not free and pat[pos] not in tones(book, ch):
            return False
    return True


def compose_line(rng, book, words, fillers, pat, length, end_choices, relaxed, avoid=()):
    splits = [[2, 2, 1], [2, 1, 2]] if length == 5 else [[2, 2, 2, 1], [2, 2, 1, 2]]
    for _ in range(400):
        shape = rng.choice(splits)
        text = ""
        ok = True
        for seg_i, seg in enumerate(shape):
            start = len(text)
            last = seg_i == len(shape) - 1
            if seg == 2:
                pool = [w for w in words if w not in avoid and w not in text
                        and fits(book, w, pat, start, relaxed, length)]
                if last:
                    pool = [w for w in pool if w[1] in end_choices]
            else:
                pool = [c for c in fillers if fits(book, c, pat, start, relaxed, length)]
                if last:
                    pool = [c for c in end_choices if fits(book, c, pat, start, relaxed, length)]
            if not pool:
                ok = False
                break
            text += rng.choice(sorted(pool))
        if ok:
            return text
    return None


def make_poem(rng, book, topic_words, all_words, rhyme_groups, n_lines, length):
    template = rng.choice(TEMPLATES)
    letters = template
    if n_lines == 8:
        letters += "ABCD" if template[0] in "AD" else "CDAB"
    relaxed = rng.random() < 0.7
    group = rng.choice(rhyme_groups)
    members = sorted(c for c in book if group in ping_groups(book, c))
    ze_chars = sorted(c for c in book if tones(book, c) == {"Z"} and c not in STOPWORDS)
    used = set()
    seen_words = set()
    lines = []
    for i, letter in enumerate(letters):
        pat = pattern(letter, length)
        words = topic_words if rng.random() < 0.75 else all_words
        if pat[-1] == "P":
            ends = [c for c in members if c not in used]
        else:
            ends = ze_chars
        line = compose_line(rng, book, words, FILLERS, pat, length, set(ends), relaxed,
                            seen_words)
        if line is None:
            line = compose_line(rng, book, all_words, FILLERS + sorted(book), pat, length,
                                set(ends), True)
        if line is None:
            return None
        if pat[-1] == "P":
            used.add(line[-1])
        seen_words.update(line[i:i + 2] for i in range(len(line) - 1))
        lines.append(line)
    return lines


def punctuate(lines):
    out = []
    for i, line in enumerate(lines):
        out.append(line + ("，" if i % 2 == 0 else "。"))
    return "".join(out)


def write_book(rows, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write("# Fixture Pingshui rhyme book: char<TAB>group<TAB>tone\n")
        for ch, group, tone in rows:
            f.write(f"{ch}\t{group}\t{tone}\n")


def embeddings(book, dim=16):
    rng = random.Random(1729)
    centers = {t: [rng.gauss(0, 1) for _ in range(dim)] for t in TOPICS}
    membership = {}
    for topic, words in TOPICS.items():
        for w in words.split():
            for ch in w:
                membership.setdefault(ch, []).append(topic)
    vectors = {}
    for ch in sorted(book):
        noise_rng = random.Random(int(hashlib.sha256(ch.encode()).hexdigest()[:12], 16))
        noise = [noise_rng.gauss(0, 0.35) for _ in range(dim)]
        topics = membership.get(ch, [])
        if topics:
            base = [sum(centers[t][d] for t in topics) / len(topics) for d in range(dim)]
        else:
            base = [0.0] * dim
        vectors[ch] = [b + n for b, n in zip(base, noise)]
    return vectors


def write_turing(out, respondents=616, items=16, correct=4960):
    """Answer key plus a response sheet with exactly `correct` right answers."""
    rng = random.Random(616)
    ids = [f"q{i + 1:02d}" for i in range(items)]
    key = {i: rng.choice("AB") for i in ids}
    cells = [(r, i) for r in range(respondents) for i in ids]
    right = set(rng.sample(range(len(cells)), correct))
    (out / "turing").mkdir(exist_ok=True)
    (out / "turing" / "key.json").write_text(json.dumps(key, indent=2) + "\n", encoding="utf-8")
    with open(out / "turing" / "responses.csv", "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["respondent_id", "item_id", "choice"])
        for n, (r, i) in enumerate(cells):
            choice = key[i] if n in right else ("B" if key[i] == "A" else "A")
            w.writerow([f"r{r + 1:03d}", i, choice])


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    book, rows = parse_readings()

    all_words = []
    for words in TOPICS.values():
        for w in words.split():
            missing = [c for c in w if c not in book]
            assert not missing, (w, missing)
            if w not in all_words:
                all_words.append(w)
    for _, _, _, content in NAMED_POEMS:
        for ch in content:
            if ch not in "，。":
                assert ch in book, ch
    for ch in FILLERS + STOPWORDS:
        assert ch in book, ch

    write_book(rows, out / "rhyme_book.tsv")
    (out / "stopwords.txt").write_text("\n".join(STOPWORDS) + "\n", encoding="utf-8")
    (out / "lexicon.txt").write_text("\n".join(all_words) + "\n", encoding="utf-8")

    vecs = embeddings(book)
    with open(out / "embeddings.txt", "w", encoding="utf-8") as f:
        f.write(f"{len(vecs)} 16\n")
        for ch, v in vecs.items():
            f.write(ch + " " + " ".join(f"{x:.6f}" for x in v) + "\n")

    rhyme_groups = [g for g in {g for v in book.values() for t, g in v if t == "P"}
                    if sum(1 for c in book if g in ping_groups(book, c)) >= 8]
    rhyme_groups.sort()

    rng = random.Random(20221016)
    shapes = [(4, 5), (4, 7), (8, 5), (8, 7)]
    records = list(NAMED_POEMS)
    style_records = []
    topics = sorted(TOPICS)
    serial = 0
    while len(records) < 1200:
        n_lines, length = rng.choice(shapes)
        topic = rng.choice(topics)
        lines = make_poem(rng, book, TOPICS[topic].split(), all_words, rhyme_groups,
                          n_lines, length)
        if lines is None:
            continue
        serial += 1
        rec = (f"拟作其{serial}", "当代", f"{topic}", punctuate(lines))
        records.append(rec)
        if topic == "amorous":
            style_records.append(rec)

    # Planted duplicates with spacing/punctuation variants, a few gap-marked
    # poems and a few irregular ones.
    dup_rng = random.Random(7)
    for idx in dup_rng.sample(range(len(NAMED_POEMS), len(records)), 10):
        title, dyn, author, content = records[idx]
        records.append((title + "（重出）", dyn, author, content.replace("，", "， ").replace("。", "．")))
    for idx in dup_rng.sample(range(len(NAMED_POEMS), len(records) - 10), 3):
        title, dyn, author, content = records[idx]
        records.append((title + "（残）", dyn, author, "?" + content[1:]))
    records.append(("杂言", "当代", "佚名", "山高月小，水落石出。清风徐来。"))

    def dump(rows, path):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["title", "dynasty", "author", "content"])
        for r in rows:
            w.writerow(r)
        Path(path).write_text(buf.getvalue(), encoding="utf-8")

    dump(records, out / "corpus.csv")
    dump(style_records, out / "style_amorous.csv")
    write_turing(out)
    print(f"{len(records)} records, {len(style_records)} amorous, "
          f"{len(book)} chars, {len(all_words)} words", file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data")
