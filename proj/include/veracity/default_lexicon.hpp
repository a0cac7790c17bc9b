#pragma once

// Bundled default affect lexicon: 8 categories x 20 words, `category<TAB>word`.
// Kept byte-identical to data/affect_lexicon.tsv.

namespace veracity {

inline constexpr const char* kDefaultLexiconText = R"LEX(anger	angry
anger	rage
anger	furious
anger	outrage
anger	hate
anger	hostile
anger	attack
anger	fury
anger	resent
anger	bitter
anger	violent
anger	irate
anger	enraged
anger	wrath
anger	scream
anger	threat
anger	destroy
anger	betray
anger	insult
anger	mad
anticipation	expect
anticipation	await
anticipation	soon
anticipation	upcoming
anticipation	plan
anticipation	prepare
anticipation	hope
anticipation	eager
anticipation	future
anticipation	anticipate
anticipation	forecast
anticipation	ready
anticipation	pending
anticipation	imminent
anticipation	tomorrow
anticipation	predict
anticipation	countdown
anticipation	prospect
anticipation	awaiting
anticipation	brewing
disgust	disgusting
disgust	vile
disgust	gross
disgust	corrupt
disgust	filthy
disgust	sick
disgust	nasty
disgust	repulsive
disgust	rotten
disgust	shameful
disgust	scandal
disgust	sleazy
disgust	revolting
disgust	foul
disgust	sordid
disgust	creepy
disgust	toxic
disgust	abhorrent
disgust	despicable
disgust	loathsome
fear	fear
fear	afraid
fear	panic
fear	terror
fear	danger
fear	deadly
fear	threaten
fear	scared
fear	alarm
fear	crisis
fear	horror
fear	risk
fear	dread
fear	warning
fear	emergency
fear	frightening
fear	catastrophe
fear	lethal
fear	outbreak
fear	collapse
joy	happy
joy	joy
joy	celebrate
joy	delight
joy	cheerful
joy	wonderful
joy	glad
joy	pleased
joy	smile
joy	fun
joy	love
joy	success
joy	win
joy	thrilled
joy	festive
joy	grateful
joy	proud
joy	bliss
joy	triumph
joy	enjoy
sadness	sad
sadness	grief
sadness	tragic
sadness	mourn
sadness	sorrow
sadness	loss
sadness	cry
sadness	lonely
sadness	despair
sadness	heartbroken
sadness	gloomy
sadness	misery
sadness	tears
sadness	suffering
sadness	unhappy
sadness	regret
sadness	depressed
sadness	bereaved
sadness	lament
sadness	hopeless
surprise	shocking
surprise	surprise
surprise	unexpected
surprise	sudden
surprise	astonishing
surprise	stunning
surprise	unbelievable
surprise	amazing
surprise	bizarre
surprise	incredible
surprise	startling
surprise	remarkable
surprise	wow
surprise	strange
surprise	unprecedented
surprise	jawdropping
surprise	baffling
surprise	astounding
surprise	abrupt
surprise	mysterious
trust	trust
trust	reliable
trust	official
trust	confirmed
trust	verified
trust	honest
trust	credible
trust	accurate
trust	evidence
trust	report
trust	study
trust	expert
trust	research
trust	data
trust	source
trust	authority
trust	fact
trust	transparent
trust	agency
trust	documented
)LEX";

}  // namespace veracity
